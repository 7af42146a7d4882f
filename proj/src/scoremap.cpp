#include "sfdet/scoremap.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "sfdet/error.hpp"

namespace sfdet {

namespace {

std::vector<double> outer(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  std::vector<double> w;
  w.reserve(a.size() * b.size());
  for (double x : a) {
    for (double y : b) w.push_back(x * y * scale);
  }
  return w;
}

std::vector<double> identity_weights(int size) {
  std::vector<double> w(static_cast<std::size_t>(size * size), 0.0);
  w[static_cast<std::size_t>((size * size) / 2)] = 1.0;
  return w;
}

std::vector<double> unsharp_weights(int size) {
  const double n = static_cast<double>(size * size);
  std::vector<double> w(static_cast<std::size_t>(size * size), -1.0 / n);
  w[static_cast<std::size_t>((size * size) / 2)] = 2.0 - 1.0 / n;
  return w;
}

// Full 2-D convolution of two square kernels.
std::vector<double> compose(const std::vector<double>& a, int sa, const std::vector<double>& b, int sb) {
  const int so = sa + sb - 1;
  std::vector<double> out(static_cast<std::size_t>(so * so), 0.0);
  for (int r = 0; r < sa; ++r) {
    for (int c = 0; c < sa; ++c) {
      for (int u = 0; u < sb; ++u) {
        for (int v = 0; v < sb; ++v) {
          out[static_cast<std::size_t>((r + u) * so + c + v)] +=
              a[static_cast<std::size_t>(r * sa + c)] * b[static_cast<std::size_t>(u * sb + v)];
        }
      }
    }
  }
  return out;
}

void convolve_channels(const ScoreMap& in, const Kernel& k, ScoreMap& out, std::size_t c_begin, std::size_t c_end) {
  const auto h = static_cast<long>(in.height());
  const auto w = static_cast<long>(in.width());
  const long r = k.size / 2;
  for (std::size_t c = c_begin; c < c_end; ++c) {
    for (long i = 0; i < h; ++i) {
      for (long j = 0; j < w; ++j) {
        double acc = 0.0;
        for (long u = 0; u < k.size; ++u) {
          const long y = std::clamp(i + u - r, 0L, h - 1);
          for (long v = 0; v < k.size; ++v) {
            const long x = std::clamp(j + v - r, 0L, w - 1);
            acc += k.at(static_cast<int>(u), static_cast<int>(v)) *
                   in.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
          }
        }
        out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), c) = acc;
      }
    }
  }
}

}  // namespace

ScoreMap::ScoreMap(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels), values_(height * width * channels, fill) {}

ScoreMap::ScoreMap(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> values)
    : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
  if (values_.size() != height * width * channels) throw Error("score map payload does not match its shape");
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Unsharp: return "unsharp";
    case KernelKind::Gaussian: return "gaussian";
    case KernelKind::Laplacian: return "laplacian";
    case KernelKind::LoG: return "log";
    case KernelKind::Identity: return "identity";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  for (KernelKind k : {KernelKind::Unsharp, KernelKind::Gaussian, KernelKind::Laplacian, KernelKind::LoG,
                       KernelKind::Identity}) {
    if (to_string(k) == name) return k;
  }
  throw Error("unknown kernel kind '" + std::string(name) + "'");
}

double Kernel::sum() const {
  double s = 0.0;
  for (double v : weights) s += v;
  return s;
}

Kernel make_kernel(KernelKind kind, int size) {
  const auto unsupported = [&] {
    return Error("unsupported kernel " + std::string(to_string(kind)) + " " + std::to_string(size) + "x" +
                 std::to_string(size));
  };
  switch (kind) {
    case KernelKind::Identity:
      if (size < 1 || size % 2 == 0) throw unsupported();
      return {kind, size, identity_weights(size)};
    case KernelKind::Unsharp:
      if (size != 3 && size != 5) throw unsupported();
      return {kind, size, unsharp_weights(size)};
    case KernelKind::Gaussian:
      if (size == 3) return {kind, 3, outer({1, 2, 1}, {1, 2, 1}, 1.0 / 16.0)};
      if (size == 5) return {kind, 5, outer({1, 4, 6, 4, 1}, {1, 4, 6, 4, 1}, 1.0 / 256.0)};
      throw unsupported();
    case KernelKind::Laplacian:
      if (size == 3) return {kind, 3, {0, 1, 0, 1, -4, 1, 0, 1, 0}};
      if (size == 5) {
        std::vector<double> w(25, 1.0);
        w[12] = -24.0;
        return {kind, 5, std::move(w)};
      }
      throw unsupported();
    case KernelKind::LoG:
      if (size == 3) {
        const Kernel g = make_kernel(KernelKind::Gaussian, 3);
        const Kernel l = make_kernel(KernelKind::Laplacian, 3);
        return {kind, 5, compose(g.weights, 3, l.weights, 3)};
      }
      throw unsupported();
  }
  throw unsupported();
}

Kernel kernel_from_weights(KernelKind kind, int size, std::vector<double> weights) {
  if (size < 1 || size % 2 == 0) throw Error("kernel size must be odd");
  if (weights.size() != static_cast<std::size_t>(size * size)) {
    throw Error("kernel needs " + std::to_string(size * size) + " weights, got " + std::to_string(weights.size()));
  }
  Kernel k{kind, size, std::move(weights)};
  if ((kind == KernelKind::Unsharp || kind == KernelKind::Gaussian) && std::abs(k.sum() - 1.0) > 1e-12) {
    throw Error(std::string(to_string(kind)) + " kernel weights must sum to 1");
  }
  return k;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ScoreMap sigmoid_map(const ScoreMap& m) {
  ScoreMap out = m;
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

ScoreMap convolve2d(const ScoreMap& m, const Kernel& k, unsigned threads) {
  if (k.size < 1 || k.size % 2 == 0 || k.weights.size() != static_cast<std::size_t>(k.size * k.size)) {
    throw Error("malformed kernel");
  }
  if (static_cast<std::size_t>(k.size) > m.height() || static_cast<std::size_t>(k.size) > m.width()) {
    throw Error("kernel " + std::to_string(k.size) + "x" + std::to_string(k.size) + " is larger than the " +
                std::to_string(m.height()) + "x" + std::to_string(m.width()) + " map");
  }
  ScoreMap out(m.height(), m.width(), m.channels());
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, m.channels()));
  if (workers == 1) {
    convolve_channels(m, k, out, 0, m.channels());
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (m.channels() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * per;
    const std::size_t end = std::min(m.channels(), begin + per);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] { convolve_channels(m, k, out, begin, end); });
  }
  for (auto& t : pool) t.join();
  return out;
}

ScoreMap apply_hpf(const ScoreMap& m, const Kernel& k, unsigned threads) {
  ScoreMap out = convolve2d(m, k, threads);
  for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace sfdet
