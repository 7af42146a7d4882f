#include "sfdet/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <tuple>

#include "sfdet/error.hpp"

namespace sfdet {

namespace {

bool is_integer_multiple(double value, double base) {
  const double q = value / base;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q) && std::round(q) >= 1.0;
}

void require_positive(const std::vector<double>& values, const char* what) {
  if (values.empty()) throw Error(std::string("anchor spec: ") + what + " is empty");
  for (double v : values) {
    if (!(v > 0.0)) throw Error(std::string("anchor spec: ") + what + " must be positive");
  }
}

void append_shapes(std::vector<AnchorShape>& out, double base, const AnchorSpec& spec) {
  for (double scale : spec.scales_per_size) {
    const double size = base * scale;
    for (double ratio : spec.aspect_ratios) {
      const double root = std::sqrt(ratio);
      out.push_back({size * root, size / root});
    }
  }
}

struct Candidate {
  double iou = -1.0;
  std::size_t level = 0;
  std::size_t lattice = 0;
  std::size_t flat = 0;

  // Larger IoU wins; ties go to the lower (level, lattice, flat).
  bool better_than(const Candidate& other) const {
    if (iou != other.iou) return iou > other.iou;
    return std::tie(level, lattice, flat) < std::tie(other.level, other.lattice, other.flat);
  }
};

Assignment assign_one(std::size_t object_index, const OBox& object, const std::vector<AnchorLattice>& lattices,
                      double pos_threshold, IouMode mode) {
  const HBox env = enclosing_hbox(object);
  Candidate best;
  for (std::size_t li = 0; li < lattices.size(); ++li) {
    const AnchorLattice& lat = lattices[li];
    const double s = lat.stride();
    const auto clamp_index = [](double v, std::size_t n) -> std::size_t {
      if (v <= 0.0) return 0;
      return std::min(static_cast<std::size_t>(v), n - 1);
    };
    for (std::size_t k = 0; k < lat.anchors_per_location(); ++k) {
      const AnchorShape& shape = lat.shapes()[k];
      // Anchors outside these index windows cannot touch the object envelope.
      const double j_lo = std::floor((env.x_min - shape.w / 2.0) / s - 0.5);
      const double j_hi = std::ceil((env.x_max + shape.w / 2.0) / s - 0.5);
      const double i_lo = std::floor((env.y_min - shape.h / 2.0) / s - 0.5);
      const double i_hi = std::ceil((env.y_max + shape.h / 2.0) / s - 0.5);
      if (j_hi < 0.0 || i_hi < 0.0) continue;
      if (j_lo > static_cast<double>(lat.feature_w() - 1) || i_lo > static_cast<double>(lat.feature_h() - 1)) continue;
      const std::size_t j0 = clamp_index(j_lo, lat.feature_w());
      const std::size_t j1 = clamp_index(j_hi, lat.feature_w());
      const std::size_t i0 = clamp_index(i_lo, lat.feature_h());
      const std::size_t i1 = clamp_index(i_hi, lat.feature_h());
      for (std::size_t i = i0; i <= i1; ++i) {
        for (std::size_t j = j0; j <= j1; ++j) {
          const AnchorIndex idx{i, j, k};
          Candidate c{anchor_object_iou(lat.anchor(idx), object, mode), lat.level(), li, lat.flatten(idx)};
          if (c.better_than(best)) best = c;
        }
      }
    }
  }

  if (best.iou <= 0.0) {
    // Every anchor scores zero: the tie rule picks the first anchor of the
    // lowest level.
    std::size_t li = 0;
    for (std::size_t n = 1; n < lattices.size(); ++n) {
      if (lattices[n].level() < lattices[li].level()) li = n;
    }
    best = Candidate{0.0, lattices[li].level(), li, 0};
  }

  const AnchorLattice& lat = lattices[best.lattice];
  return Assignment{object_index, best.level, lat.unflatten(best.flat), best.iou, best.iou >= pos_threshold};
}

}  // namespace

void AnchorSpec::validate() const {
  require_positive(base_sizes, "base_sizes");
  require_positive(strides, "strides");
  require_positive(aspect_ratios, "aspect_ratios");
  require_positive(scales_per_size, "scales_per_size");
  if (base_sizes.size() != strides.size()) throw Error("anchor spec: base_sizes and strides differ in length");
  for (std::size_t l = 0; l < base_sizes.size(); ++l) {
    if (!is_integer_multiple(base_sizes[l], strides[l])) {
      throw Error("anchor spec: base size " + std::to_string(base_sizes[l]) + " is not a multiple of stride " +
                  std::to_string(strides[l]));
    }
    if (l > 0 && std::abs(base_sizes[l] - 2.0 * base_sizes[l - 1]) > 1e-9 * base_sizes[l]) {
      throw Error("anchor spec: consecutive base sizes must differ by a factor of 2");
    }
  }
}

AnchorSpec AnchorSpec::original() { return {{32, 64, 128, 256, 512}, {0.5, 1.0, 2.0}, {4, 8, 16, 32, 64}, {1.0}}; }

AnchorSpec AnchorSpec::adjusted() { return {{16, 32, 64, 128, 256}, {0.5, 1.0, 2.0}, {4, 8, 16, 32, 64}, {1.0}}; }

AnchorLattice::AnchorLattice(std::size_t level, double stride, std::size_t feature_h, std::size_t feature_w,
                             std::vector<AnchorShape> shapes)
    : level_(level), stride_(stride), feature_h_(feature_h), feature_w_(feature_w), shapes_(std::move(shapes)) {
  if (!(stride > 0.0)) throw Error("lattice stride must be positive");
  if (feature_h == 0 || feature_w == 0) throw Error("lattice feature dims must be positive");
  if (shapes_.empty()) throw Error("lattice needs at least one anchor shape");
}

Point AnchorLattice::center(std::size_t i, std::size_t j) const {
  return {(static_cast<double>(j) + 0.5) * stride_, (static_cast<double>(i) + 0.5) * stride_};
}

OBox AnchorLattice::anchor(const AnchorIndex& idx) const {
  const Point c = center(idx.i, idx.j);
  const AnchorShape& s = shapes_[idx.k];
  return OBox{c.x, c.y, s.w, s.h, 0.0};
}

HBox AnchorLattice::anchor_hbox(const AnchorIndex& idx) const {
  const Point c = center(idx.i, idx.j);
  const AnchorShape& s = shapes_[idx.k];
  return HBox{c.x - s.w / 2.0, c.y - s.h / 2.0, c.x + s.w / 2.0, c.y + s.h / 2.0};
}

std::size_t AnchorLattice::flatten(const AnchorIndex& idx) const {
  return (idx.i * feature_w_ + idx.j) * shapes_.size() + idx.k;
}

AnchorIndex AnchorLattice::unflatten(std::size_t flat) const {
  const std::size_t a = shapes_.size();
  const std::size_t cell = flat / a;
  return {cell / feature_w_, cell % feature_w_, flat % a};
}

bool AnchorLattice::contains(const AnchorIndex& idx) const {
  return idx.i < feature_h_ && idx.j < feature_w_ && idx.k < shapes_.size();
}

AnchorLattice generate_lattice(const AnchorSpec& spec, std::size_t level, std::size_t feature_h,
                               std::size_t feature_w) {
  if (level >= spec.base_sizes.size() || level >= spec.strides.size()) {
    throw Error("lattice level " + std::to_string(level) + " out of range");
  }
  require_positive(spec.aspect_ratios, "aspect_ratios");
  require_positive(spec.scales_per_size, "scales_per_size");
  std::vector<AnchorShape> shapes;
  append_shapes(shapes, spec.base_sizes[level], spec);
  return AnchorLattice(level, spec.strides[level], feature_h, feature_w, std::move(shapes));
}

AnchorLattice multi_anchor_lattice(const AnchorSpec& spec, double stride, std::size_t feature_h,
                                   std::size_t feature_w) {
  require_positive(spec.base_sizes, "base_sizes");
  require_positive(spec.aspect_ratios, "aspect_ratios");
  require_positive(spec.scales_per_size, "scales_per_size");
  std::vector<AnchorShape> shapes;
  for (double base : spec.base_sizes) append_shapes(shapes, base, spec);
  return AnchorLattice(0, stride, feature_h, feature_w, std::move(shapes));
}

double anchor_object_iou(const OBox& anchor, const OBox& object, IouMode mode) {
  if (mode == IouMode::ExactObb) return iou_obb(anchor, object);
  return iou_hbb(enclosing_hbox(anchor), enclosing_hbox(object));
}

std::vector<Assignment> assign_max_iou(const std::vector<OBox>& objects, const std::vector<AnchorLattice>& lattices,
                                       double pos_threshold, IouMode mode, unsigned threads) {
  if (lattices.empty()) throw Error("assign_max_iou needs at least one lattice");
  if (!(pos_threshold > 0.0 && pos_threshold < 1.0)) throw Error("positive threshold must lie in (0, 1)");

  std::vector<Assignment> out(objects.size());
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, objects.size()));
  if (workers == 1) {
    for (std::size_t n = 0; n < objects.size(); ++n) out[n] = assign_one(n, objects[n], lattices, pos_threshold, mode);
    return out;
  }

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t n = w; n < objects.size(); n += workers) {
        out[n] = assign_one(n, objects[n], lattices, pos_threshold, mode);
      }
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

std::size_t feature_extent(double image_extent, double stride) {
  if (!(image_extent > 0.0) || !(stride > 0.0)) throw Error("image extent and stride must be positive");
  return static_cast<std::size_t>(std::ceil(image_extent / stride - 1e-9));
}

CoverageReport coverage_report(const std::vector<OBox>& objects, const AnchorSpec& spec, double image_w,
                               double image_h, double pos_threshold, IouMode mode, unsigned threads) {
  spec.validate();
  std::vector<AnchorLattice> lattices;
  lattices.reserve(spec.base_sizes.size());
  for (std::size_t l = 0; l < spec.base_sizes.size(); ++l) {
    lattices.push_back(generate_lattice(spec, l, feature_extent(image_h, spec.strides[l]),
                                        feature_extent(image_w, spec.strides[l])));
  }

  CoverageReport report;
  report.object_count = objects.size();
  for (std::size_t l = 0; l < spec.base_sizes.size(); ++l) {
    report.levels.push_back({l, spec.strides[l], spec.base_sizes[l], 0, 0.0});
  }
  if (objects.empty()) return report;

  for (const Assignment& a : assign_max_iou(objects, lattices, pos_threshold, mode, threads)) {
    if (a.positive) {
      ++report.levels[a.best_level].matched_count;
    } else {
      ++report.unmatched_count;
    }
  }
  return merge_coverage({report});
}

CoverageReport merge_coverage(const std::vector<CoverageReport>& reports) {
  CoverageReport merged;
  for (const CoverageReport& r : reports) {
    if (merged.levels.empty()) {
      merged.levels = r.levels;
      for (auto& l : merged.levels) l.matched_count = 0;
    }
    if (r.levels.size() != merged.levels.size()) throw Error("cannot merge coverage reports of different specs");
    for (std::size_t l = 0; l < r.levels.size(); ++l) merged.levels[l].matched_count += r.levels[l].matched_count;
    merged.object_count += r.object_count;
    merged.unmatched_count += r.unmatched_count;
  }
  if (merged.object_count > 0) {
    const double n = static_cast<double>(merged.object_count);
    for (auto& l : merged.levels) l.matched_fraction = static_cast<double>(l.matched_count) / n;
    merged.unmatched_fraction = static_cast<double>(merged.unmatched_count) / n;
  }
  return merged;
}

double worst_case_iou(double anchor_size, double stride, double object_size) {
  if (!(anchor_size > 0.0) || !(stride > 0.0) || !(object_size > 0.0)) {
    throw Error("worst_case_iou arguments must be positive");
  }
  const double overlap =
      std::max(0.0, std::min({anchor_size, object_size, (anchor_size + object_size) / 2.0 - stride / 2.0}));
  const double inter = overlap * overlap;
  return inter / (anchor_size * anchor_size + object_size * object_size - inter);
}

}  // namespace sfdet
