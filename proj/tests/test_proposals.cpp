#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sfdet/error.hpp"
#include "sfdet/proposals.hpp"

using namespace sfdet;

namespace {

AnchorLattice single_lattice(std::size_t h, std::size_t w) {
  return generate_lattice(AnchorSpec{{16}, {1.0}, {8}, {1.0}}, 0, h, w);
}

AnchorLattice three_ratio_lattice(std::size_t h, std::size_t w) {
  return generate_lattice(AnchorSpec{{16}, {0.5, 1.0, 2.0}, {8}, {1.0}}, 0, h, w);
}

DeltaMap zero_deltas(const AnchorLattice& lat) {
  return DeltaMap(lat.feature_h(), lat.feature_w(), lat.anchors_per_location() * kDeltaParams);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

// Background, a 6x6 plateau at probability 0.5 and an isolated 0.4 peak.
ScoreMap plateau_and_peak() {
  ScoreMap m(16, 16, 1, logit(0.0025));
  for (std::size_t i = 2; i < 8; ++i) {
    for (std::size_t j = 2; j < 8; ++j) m.at(i, j, 0) = 0.0;
  }
  m.at(12, 12, 0) = logit(0.4);
  return m;
}

std::size_t rank_of(const std::vector<Proposal>& props, const AnchorIndex& idx) {
  for (std::size_t n = 0; n < props.size(); ++n) {
    if (props[n].source_anchor == idx) return n;
  }
  return props.size();
}

}  // namespace

TEST(Decode, ZeroDeltasReturnAnchor) {
  const AnchorLattice lat = three_ratio_lattice(4, 4);
  const DeltaMap d = zero_deltas(lat);
  const AnchorIndex idx{2, 1, 2};
  const OBox box = decode(lat, d, {idx})[0];
  const OBox a = lat.anchor(idx);
  EXPECT_DOUBLE_EQ(box.cx, a.cx);
  EXPECT_DOUBLE_EQ(box.cy, a.cy);
  EXPECT_DOUBLE_EQ(box.w, a.w);
  EXPECT_DOUBLE_EQ(box.h, a.h);
  EXPECT_DOUBLE_EQ(box.theta, 0.0);
}

TEST(Decode, ScaleShiftAndClamp) {
  const AnchorLattice lat = single_lattice(4, 4);
  DeltaMap d = zero_deltas(lat);
  d.at(0, 0, 2) = std::log(2.0);
  d.at(1, 1, 0) = 1.0;
  d.at(2, 2, 3) = 50.0;
  d.at(3, 3, 4) = kPi / 2;
  const auto boxes = decode(lat, d, {{0, 0, 0}, {1, 1, 0}, {2, 2, 0}, {3, 3, 0}});
  EXPECT_NEAR(boxes[0].w, 32.0, 1e-12);
  EXPECT_DOUBLE_EQ(boxes[0].h, 16.0);
  EXPECT_DOUBLE_EQ(boxes[1].cx, 12.0 + 16.0);
  EXPECT_NEAR(boxes[2].h, 16.0 * 1000.0, 1e-6);
  EXPECT_DOUBLE_EQ(boxes[3].theta, -kPi / 2);
  EXPECT_THROW(decode(lat, d, {{4, 0, 0}}), Error);
  EXPECT_THROW(decode(lat, DeltaMap(4, 4, 4), {{0, 0, 0}}), Error);
}

TEST(Topk, OrderAndTies) {
  ScoreMap m(2, 2, 2, 0.5);
  m.at(1, 0, 1) = 0.9;
  m.at(0, 1, 0) = 0.7;
  const auto top = topk(m, 4);
  ASSERT_EQ(top.size(), 4u);
  EXPECT_EQ(top[0], (AnchorIndex{1, 0, 1}));
  EXPECT_EQ(top[1], (AnchorIndex{0, 1, 0}));
  // Equal scores follow flat order.
  EXPECT_EQ(top[2], (AnchorIndex{0, 0, 0}));
  EXPECT_EQ(top[3], (AnchorIndex{0, 0, 1}));
  EXPECT_EQ(topk(m, 100).size(), 8u);
  EXPECT_THROW(topk(m, 0), Error);
}

TEST(TopkProperty, MatchesFullSortAndNests) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> level(0, 20);
  ScoreMap m(9, 7, 3);
  for (double& v : m.values()) v = level(rng) / 20.0;  // many ties
  std::vector<std::size_t> order(m.size());
  for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m.values()[a] > m.values()[b]; });

  const auto full = topk(m, m.size());
  for (std::size_t r = 0; r < full.size(); ++r) EXPECT_EQ(m.index(full[r].i, full[r].j, full[r].k), order[r]);
  for (std::size_t k = 1; k < m.size(); k += 7) {
    const auto small = topk(m, k);
    const auto big = topk(m, k + 5);
    EXPECT_TRUE(std::equal(small.begin(), small.end(), big.begin()));
  }
}

TEST(Nms, SmallCases) {
  const Proposal p{OBox{10, 10, 8, 4, 0.3}, 0.9, {}};
  EXPECT_EQ(rotated_nms({p}, 0.8).size(), 1u);
  Proposal q = p;
  q.score = 0.8;
  const auto kept = rotated_nms({q, p}, 0.8);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].score, 0.9);
  EXPECT_TRUE(rotated_nms({}, 0.5).empty());
}

TEST(NmsProperty, MatchesReferenceAndInvariants) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto props = oracle::random_proposals(rng, 50);
    for (double thr : {0.3, 0.5, 0.8}) {
      const auto kept = rotated_nms(props, thr);
      const auto ref = oracle::reference_nms(props, thr);
      ASSERT_EQ(kept.size(), ref.size());
      for (std::size_t n = 0; n < ref.size(); ++n) {
        EXPECT_EQ(kept[n].score, props[ref[n]].score);
        EXPECT_EQ(kept[n].box.cx, props[ref[n]].box.cx);
      }
      for (std::size_t a = 0; a < kept.size(); ++a) {
        if (a > 0) {
          EXPECT_GE(kept[a - 1].score, kept[a].score);
        }
        for (std::size_t b = a + 1; b < kept.size(); ++b) EXPECT_LT(iou_obb(kept[a].box, kept[b].box), thr);
      }
      const auto again = rotated_nms(kept, thr);
      ASSERT_EQ(again.size(), kept.size());
      for (std::size_t n = 0; n < kept.size(); ++n) EXPECT_EQ(again[n].box.cx, kept[n].box.cx);
    }
  }
}

TEST(Pipeline, UniformScoresFillBudget) {
  const AnchorLattice lat = three_ratio_lattice(32, 32);
  PipelineConfig cfg;
  cfg.k_pre = 500;
  cfg.k_post = 100;
  const auto props = rpn_postprocess(ScoreMap(32, 32, 3, 0.0), zero_deltas(lat), lat, cfg);
  ASSERT_EQ(props.size(), 100u);
  for (const auto& p : props) EXPECT_NEAR(p.score, 0.5, 1e-12);
}

TEST(Pipeline, OutputBoundedByBudget) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 2.0);
  const AnchorLattice lat = three_ratio_lattice(16, 16);
  ScoreMap logits(16, 16, 3);
  for (double& v : logits.values()) v = noise(rng);
  DeltaMap d = zero_deltas(lat);
  for (double& v : d.values()) v = 0.1 * noise(rng);
  for (std::size_t budget : {1u, 10u, 300u, 768u}) {
    PipelineConfig cfg;
    cfg.k_pre = 768;
    cfg.k_post = budget;
    const auto props = rpn_postprocess(logits, d, lat, cfg);
    EXPECT_LE(props.size(), budget);
    EXPECT_GE(props.size(), 1u);
  }
}

TEST(Pipeline, HpfPromotesIsolatedPeak) {
  const AnchorLattice lat = single_lattice(16, 16);
  const ScoreMap logits = plateau_and_peak();
  PipelineConfig cfg;
  cfg.k_pre = 40;
  cfg.k_post = 40;
  const auto with = rpn_postprocess(logits, zero_deltas(lat), lat, cfg);
  cfg.hpf_enabled = false;
  const auto without = rpn_postprocess(logits, zero_deltas(lat), lat, cfg);

  const AnchorIndex peak{12, 12, 0};
  const std::size_t r_with = rank_of(with, peak), r_without = rank_of(without, peak);
  EXPECT_EQ(r_without, 36u);
  EXPECT_LT(r_with, 20u);
  EXPECT_NEAR(with[r_with].score, 2 * 0.4 - (0.4 + 24 * 0.0025) / 25, 1e-9);
  // Same anchor decodes to the same box either way.
  EXPECT_EQ(with[r_with].box.cx, without[r_without].box.cx);
  EXPECT_EQ(with[r_with].box.w, without[r_without].box.w);
}

TEST(Pipeline, RejectsMismatchedShapes) {
  const AnchorLattice lat = three_ratio_lattice(8, 8);
  const PipelineConfig cfg;
  EXPECT_THROW(rpn_postprocess(ScoreMap(8, 8, 2), zero_deltas(lat), lat, cfg), Error);
  EXPECT_THROW(rpn_postprocess(ScoreMap(8, 8, 3), DeltaMap(8, 8, 14), lat, cfg), Error);
  EXPECT_THROW(rpn_postprocess(ScoreMap(8, 7, 3), zero_deltas(lat), lat, cfg), Error);
  PipelineConfig bad;
  bad.k_post = bad.k_pre + 1;
  EXPECT_THROW(bad.validate(), Error);
  bad = PipelineConfig{};
  bad.nms_iou_threshold = 1.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Pipeline, DeterministicAcrossThreads) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> noise(0.0, 1.5);
  const AnchorLattice lat = three_ratio_lattice(24, 24);
  ScoreMap logits(24, 24, 3);
  for (double& v : logits.values()) v = noise(rng);
  DeltaMap d = zero_deltas(lat);
  for (double& v : d.values()) v = 0.2 * noise(rng);
  PipelineConfig cfg;
  cfg.k_pre = 600;
  cfg.k_post = 300;
  const auto a = rpn_postprocess(logits, d, lat, cfg, 1);
  const auto b = rpn_postprocess(logits, d, lat, cfg, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    EXPECT_EQ(a[n].score, b[n].score);
    EXPECT_EQ(a[n].source_anchor, b[n].source_anchor);
  }
}

TEST(BudgetSweep, RowsFollowBudgets) {
  const AnchorLattice lat = three_ratio_lattice(32, 32);
  ScoreMap logits(32, 32, 3, -3.0);
  for (std::size_t k = 0; k < 3; ++k) {
    logits.at(8, 8, k) = 3.0;
    logits.at(20, 24, k) = 2.0;
  }
  const PipelineConfig cfg;
  const auto one = roi_budget_sweep(logits, zero_deltas(lat), lat, {1}, cfg);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].proposal_count, 1u);
  EXPECT_EQ(one[0].mean_pairwise_iou, 0.0);

  const auto rows = roi_budget_sweep(logits, zero_deltas(lat), lat, {2000, 6000, 10000}, cfg);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].budget, 2000u);
  EXPECT_EQ(rows[0].proposal_count, 2000u);
  // Only 3072 anchors exist, all distinct enough to survive NMS at 0.8.
  EXPECT_EQ(rows[1].proposal_count, 3072u);
  EXPECT_EQ(rows[2].proposal_count, 3072u);
  EXPECT_EQ(rows[1].mean_pairwise_iou, rows[2].mean_pairwise_iou);
  EXPECT_THROW(roi_budget_sweep(logits, zero_deltas(lat), lat, {}, cfg), Error);
}

TEST(MeanPairwiseIou, Values) {
  const Proposal a{OBox{0, 0, 4, 4, 0}, 1.0, {}};
  const Proposal b{OBox{2, 0, 4, 4, 0}, 0.5, {}};
  EXPECT_EQ(mean_pairwise_iou({a}), 0.0);
  EXPECT_NEAR(mean_pairwise_iou({a, b}), 8.0 / 24.0, 1e-12);
  EXPECT_NEAR(mean_pairwise_iou({a, a, a}), 1.0, 1e-9);
}
