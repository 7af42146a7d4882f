#pragma once

#include <cstddef>
#include <vector>

#include "sfdet/geom.hpp"

namespace sfdet {

/// Anchor sizes and placement for a feature pyramid.
///
/// `base_sizes[l]` and `strides[l]` describe pyramid level `l`. Each base size
/// must be an integer multiple of its stride and consecutive sizes must
/// double. The scale multipliers apply to every base size.
struct AnchorSpec {
  std::vector<double> base_sizes;
  std::vector<double> aspect_ratios;
  std::vector<double> strides;
  std::vector<double> scales_per_size{1.0};

  /// Throws sfdet::Error when an invariant is broken.
  void validate() const;

  /// Sizes 32..512 on strides 4..64, ratios {0.5, 1, 2}.
  static AnchorSpec original();
  /// Sizes 16..256 on strides 4..64, ratios {0.5, 1, 2}.
  static AnchorSpec adjusted();
};

/// Extents of one anchor type at a location.
struct AnchorShape {
  double w = 0.0;
  double h = 0.0;
};

struct AnchorIndex {
  std::size_t i = 0;  // row
  std::size_t j = 0;  // column
  std::size_t k = 0;  // anchor type at the location

  friend bool operator==(const AnchorIndex&, const AnchorIndex&) = default;
};

/// The regular anchor set on one feature map. Anchor (i, j, k) is centered
/// at ((j + 0.5) * stride, (i + 0.5) * stride) with extents shapes[k].
class AnchorLattice {
 public:
  AnchorLattice(std::size_t level, double stride, std::size_t feature_h, std::size_t feature_w,
                std::vector<AnchorShape> shapes);

  std::size_t level() const { return level_; }
  double stride() const { return stride_; }
  std::size_t feature_h() const { return feature_h_; }
  std::size_t feature_w() const { return feature_w_; }
  std::size_t anchors_per_location() const { return shapes_.size(); }
  const std::vector<AnchorShape>& shapes() const { return shapes_; }
  std::size_t size() const { return feature_h_ * feature_w_ * shapes_.size(); }

  Point center(std::size_t i, std::size_t j) const;
  OBox anchor(const AnchorIndex& idx) const;
  OBox anchor(std::size_t flat) const { return anchor(unflatten(flat)); }
  HBox anchor_hbox(const AnchorIndex& idx) const;

  /// Row-major then anchor type: ((i * feature_w) + j) * A + k.
  std::size_t flatten(const AnchorIndex& idx) const;
  AnchorIndex unflatten(std::size_t flat) const;
  bool contains(const AnchorIndex& idx) const;

 private:
  std::size_t level_;
  double stride_;
  std::size_t feature_h_;
  std::size_t feature_w_;
  std::vector<AnchorShape> shapes_;
};

/// Lattice for one pyramid level of `spec`. Anchor types are ordered
/// scale-major, ratio-minor; ratio r at size s has extents (s*sqrt(r), s/sqrt(r)).
AnchorLattice generate_lattice(const AnchorSpec& spec, std::size_t level, std::size_t feature_h,
                               std::size_t feature_w);

/// Attaches every base size of `spec` to a single lattice at `stride`
/// (size-major, then scale, then ratio). Level index is 0.
AnchorLattice multi_anchor_lattice(const AnchorSpec& spec, double stride, std::size_t feature_h,
                                   std::size_t feature_w);

/// How anchor/object overlap is measured during assignment.
enum class IouMode {
  EnclosingHBox,  // IoU against the object's axis-aligned envelope
  ExactObb,       // rotated-polygon IoU
};

struct Assignment {
  std::size_t object_index = 0;
  std::size_t best_level = 0;
  AnchorIndex best_anchor;
  double best_iou = 0.0;
  bool positive = false;
};

double anchor_object_iou(const OBox& anchor, const OBox& object, IouMode mode);

/// Best anchor per object over all lattices. Ties go to the lower level,
/// then to the lower flat index. Throws on an empty lattice list or a
/// threshold outside (0, 1).
std::vector<Assignment> assign_max_iou(const std::vector<OBox>& objects, const std::vector<AnchorLattice>& lattices,
                                       double pos_threshold, IouMode mode = IouMode::EnclosingHBox,
                                       unsigned threads = 1);

struct LevelCoverage {
  std::size_t level = 0;
  double stride = 0.0;
  double base_size = 0.0;
  std::size_t matched_count = 0;
  double matched_fraction = 0.0;
};

struct CoverageReport {
  std::vector<LevelCoverage> levels;
  std::size_t object_count = 0;
  std::size_t unmatched_count = 0;
  double unmatched_fraction = 0.0;
};

/// Feature map side for an image extent at `stride` (rounded up).
std::size_t feature_extent(double image_extent, double stride);

/// Per-level share of objects whose best anchor lives on that level with
/// IoU >= pos_threshold, plus the share matched nowhere.
CoverageReport coverage_report(const std::vector<OBox>& objects, const AnchorSpec& spec, double image_w,
                               double image_h, double pos_threshold = 0.5, IouMode mode = IouMode::EnclosingHBox,
                               unsigned threads = 1);

/// Merges per-image reports built from the same spec.
CoverageReport merge_coverage(const std::vector<CoverageReport>& reports);

/// Lowest best-anchor IoU a square object can get against a square anchor
/// lattice, over all object positions. The worst position sits stride/2 off
/// the nearest anchor center on both axes.
double worst_case_iou(double anchor_size, double stride, double object_size);

}  // namespace sfdet
