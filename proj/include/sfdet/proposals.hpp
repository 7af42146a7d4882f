#pragma once

#include <cstddef>
#include <vector>

#include "sfdet/anchors.hpp"
#include "sfdet/geom.hpp"
#include "sfdet/scoremap.hpp"

namespace sfdet {

inline constexpr std::size_t kDeltaParams = 5;  // dx, dy, dw, dh, dtheta

/// Regression deltas laid out like a ScoreMap with
/// channels = anchors_per_location * 5, channel = k * 5 + param.
using DeltaMap = ScoreMap;

struct Proposal {
  OBox box;
  double score = 0.0;
  AnchorIndex source_anchor;
};

struct PipelineConfig {
  std::size_t k_pre = 2000;
  std::size_t k_post = 2000;
  double nms_iou_threshold = 0.8;
  bool hpf_enabled = true;
  Kernel hpf_kernel = make_kernel(KernelKind::Unsharp, 5);

  void validate() const;
};

/// dw and dh are clamped to ln(1000) before exponentiation.
std::vector<OBox> decode(const AnchorLattice& lattice, const DeltaMap& deltas, const std::vector<AnchorIndex>& indices);

/// The k highest scores, best first. Equal scores keep row-major,
/// channel-minor order.
std::vector<AnchorIndex> topk(const ScoreMap& scores, std::size_t k);

/// Greedy hard NMS. A candidate is dropped when its IoU with any kept box
/// reaches the threshold, so every surviving pair is strictly below it.
std::vector<Proposal> rotated_nms(const std::vector<Proposal>& props, double iou_threshold);

/// sigmoid -> optional high-pass filter -> top-k -> decode -> NMS -> cap.
/// Proposal scores are taken from the (filtered) map used for selection.
std::vector<Proposal> rpn_postprocess(const ScoreMap& logits, const DeltaMap& deltas, const AnchorLattice& lattice,
                                      const PipelineConfig& cfg, unsigned threads = 1);

struct BudgetRow {
  std::size_t budget = 0;
  std::size_t proposal_count = 0;
  double mean_pairwise_iou = 0.0;
};

/// Runs the pipeline once per post-NMS budget and reports how much the kept
/// boxes still overlap each other.
std::vector<BudgetRow> roi_budget_sweep(const ScoreMap& logits, const DeltaMap& deltas, const AnchorLattice& lattice,
                                        const std::vector<std::size_t>& budgets, const PipelineConfig& cfg,
                                        unsigned threads = 1);

double mean_pairwise_iou(const std::vector<Proposal>& props);

}  // namespace sfdet
