#include "sfdet/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfdet/error.hpp"

namespace sfdet {

namespace {

const double kMaxLogScale = std::log(1000.0);

void check_shapes(const ScoreMap& scores, const DeltaMap& deltas, const AnchorLattice& lattice) {
  if (scores.height() != lattice.feature_h() || scores.width() != lattice.feature_w()) {
    throw Error("score map is " + std::to_string(scores.height()) + "x" + std::to_string(scores.width()) +
                " but the lattice is " + std::to_string(lattice.feature_h()) + "x" +
                std::to_string(lattice.feature_w()));
  }
  if (scores.channels() != lattice.anchors_per_location()) {
    throw Error("score map has " + std::to_string(scores.channels()) + " channels, lattice has " +
                std::to_string(lattice.anchors_per_location()) + " anchors per location");
  }
  if (deltas.height() != scores.height() || deltas.width() != scores.width()) {
    throw Error("delta map spatial dims differ from the score map");
  }
  if (deltas.channels() != scores.channels() * kDeltaParams) {
    throw Error("delta map needs " + std::to_string(scores.channels() * kDeltaParams) + " channels, got " +
                std::to_string(deltas.channels()));
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (k_post == 0 || k_post > k_pre) throw Error("pipeline requires 0 < k_post <= k_pre");
  if (!(nms_iou_threshold > 0.0 && nms_iou_threshold < 1.0)) throw Error("NMS threshold must lie in (0, 1)");
}

std::vector<OBox> decode(const AnchorLattice& lattice, const DeltaMap& deltas,
                         const std::vector<AnchorIndex>& indices) {
  if (deltas.height() != lattice.feature_h() || deltas.width() != lattice.feature_w() ||
      deltas.channels() != lattice.anchors_per_location() * kDeltaParams) {
    throw Error("delta map shape does not match the lattice");
  }
  std::vector<OBox> out;
  out.reserve(indices.size());
  for (const AnchorIndex& idx : indices) {
    if (!lattice.contains(idx)) throw Error("anchor index out of range");
    const OBox a = lattice.anchor(idx);
    const std::size_t base = idx.k * kDeltaParams;
    const double dx = deltas.at(idx.i, idx.j, base + 0);
    const double dy = deltas.at(idx.i, idx.j, base + 1);
    const double dw = std::min(deltas.at(idx.i, idx.j, base + 2), kMaxLogScale);
    const double dh = std::min(deltas.at(idx.i, idx.j, base + 3), kMaxLogScale);
    const double dt = deltas.at(idx.i, idx.j, base + 4);
    out.push_back(OBox{a.cx + dx * a.w, a.cy + dy * a.h, a.w * std::exp(dw), a.h * std::exp(dh), normalize_angle(dt)});
  }
  return out;
}

std::vector<AnchorIndex> topk(const ScoreMap& scores, std::size_t k) {
  if (k == 0) throw Error("top-k needs k >= 1");
  const auto& v = scores.values();
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) { return v[a] != v[b] ? v[a] > v[b] : a < b; });

  std::vector<AnchorIndex> out;
  out.reserve(n);
  const std::size_t c = scores.channels();
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t flat = order[r];
    const std::size_t cell = flat / c;
    out.push_back({cell / scores.width(), cell % scores.width(), flat % c});
  }
  return out;
}

std::vector<Proposal> rotated_nms(const std::vector<Proposal>& props, double iou_threshold) {
  std::vector<std::size_t> order(props.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return props[a].score > props[b].score; });

  std::vector<Proposal> kept;
  for (std::size_t idx : order) {
    const Proposal& cand = props[idx];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Proposal& k) {
      return iou_obb(k.box, cand.box) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

std::vector<Proposal> rpn_postprocess(const ScoreMap& logits, const DeltaMap& deltas, const AnchorLattice& lattice,
                                      const PipelineConfig& cfg, unsigned threads) {
  cfg.validate();
  check_shapes(logits, deltas, lattice);

  ScoreMap scores = sigmoid_map(logits);
  if (cfg.hpf_enabled) scores = apply_hpf(scores, cfg.hpf_kernel, threads);

  const std::vector<AnchorIndex> picked = topk(scores, cfg.k_pre);
  const std::vector<OBox> boxes = decode(lattice, deltas, picked);

  std::vector<Proposal> props;
  props.reserve(picked.size());
  for (std::size_t n = 0; n < picked.size(); ++n) {
    const AnchorIndex& idx = picked[n];
    props.push_back({boxes[n], scores.at(idx.i, idx.j, idx.k), idx});
  }

  std::vector<Proposal> kept = rotated_nms(props, cfg.nms_iou_threshold);
  if (kept.size() > cfg.k_post) kept.resize(cfg.k_post);
  return kept;
}

double mean_pairwise_iou(const std::vector<Proposal>& props) {
  if (props.size() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t a = 0; a < props.size(); ++a) {
    for (std::size_t b = a + 1; b < props.size(); ++b) acc += iou_obb(props[a].box, props[b].box);
  }
  const double pairs = static_cast<double>(props.size()) * static_cast<double>(props.size() - 1) / 2.0;
  return acc / pairs;
}

std::vector<BudgetRow> roi_budget_sweep(const ScoreMap& logits, const DeltaMap& deltas, const AnchorLattice& lattice,
                                        const std::vector<std::size_t>& budgets, const PipelineConfig& cfg,
                                        unsigned threads) {
  if (budgets.empty()) throw Error("budget sweep needs at least one budget");
  std::vector<BudgetRow> rows;
  rows.reserve(budgets.size());
  for (std::size_t budget : budgets) {
    PipelineConfig run = cfg;
    run.k_post = budget;
    run.k_pre = std::max(cfg.k_pre, budget);
    const std::vector<Proposal> kept = rpn_postprocess(logits, deltas, lattice, run, threads);
    rows.push_back({budget, kept.size(), mean_pairwise_iou(kept)});
  }
  return rows;
}

}  // namespace sfdet
