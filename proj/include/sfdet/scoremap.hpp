#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sfdet {

/// Rank-3 grid stored height x width x channels, channel fastest.
class ScoreMap {
 public:
  ScoreMap() = default;
  ScoreMap(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  ScoreMap(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return values_.size(); }

  double& at(std::size_t i, std::size_t j, std::size_t c) { return values_[index(i, j, c)]; }
  double at(std::size_t i, std::size_t j, std::size_t c) const { return values_[index(i, j, c)]; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t c) const { return (i * width_ + j) * channels_ + c; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> values_;
};

enum class KernelKind { Unsharp, Gaussian, Laplacian, LoG, Identity };

std::string_view to_string(KernelKind kind);
/// Accepts "unsharp", "gaussian", "laplacian", "log", "identity".
KernelKind parse_kernel_kind(std::string_view name);

/// Square odd-sized correlation kernel, row-major weights.
struct Kernel {
  KernelKind kind = KernelKind::Identity;
  int size = 1;
  std::vector<double> weights;

  double at(int r, int c) const { return weights[static_cast<std::size_t>(r * size + c)]; }
  double sum() const;
};

/// Built-in kernels:
///   unsharp 3/5   2 * identity - uniform box
///   gaussian 3/5  binomial [1 2 1] / [1 4 6 4 1] outer products
///   laplacian 3   4-neighbour stencil, center -4
///   laplacian 5   all ones, center -24
///   log 3         laplacian 3 composed with gaussian 3 (5x5 support)
///   identity n    any odd n
/// Throws sfdet::Error for anything else.
Kernel make_kernel(KernelKind kind, int size);

/// User-supplied weights, e.g. a hand-tuned 5x5 unsharp mask. Unsharp and
/// gaussian kinds must keep unit DC gain.
Kernel kernel_from_weights(KernelKind kind, int size, std::vector<double> weights);

double sigmoid(double x);
ScoreMap sigmoid_map(const ScoreMap& m);

/// Per-channel 2-D cross-correlation with replicate padding. Channels may be
/// split across `threads`; the result does not depend on the split.
ScoreMap convolve2d(const ScoreMap& m, const Kernel& k, unsigned threads = 1);

/// convolve2d followed by a clamp to [0, 1]. Expects sigmoid scores.
ScoreMap apply_hpf(const ScoreMap& m, const Kernel& k, unsigned threads = 1);

}  // namespace sfdet
