#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sfdet/error.hpp"
#include "sfdet/geom.hpp"

using namespace sfdet;

namespace {

bool has_vertex(const ConvexPolygon& p, double x, double y, double tol = 1e-9) {
  for (const Point& v : p.vertices()) {
    if (std::abs(v.x - x) < tol && std::abs(v.y - y) < tol) return true;
  }
  return false;
}

const double kOctagonArea = 2.0 * (std::sqrt(2.0) - 1.0);

}  // namespace

TEST(Geom, NormalizeAngleRange) {
  EXPECT_DOUBLE_EQ(normalize_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(normalize_angle(kPi / 2), -kPi / 2);
  EXPECT_NEAR(normalize_angle(kPi), 0.0, 1e-15);
  EXPECT_NEAR(normalize_angle(3 * kPi / 4), -kPi / 4, 1e-15);
  for (double t = -20.0; t < 20.0; t += 0.37) {
    const double n = normalize_angle(t);
    EXPECT_GE(n, -kPi / 2);
    EXPECT_LT(n, kPi / 2);
  }
  EXPECT_THROW(make_obox(0, 0, -1, 1, 0), Error);
}

TEST(Geom, AxisAlignedSquareCorners) {
  const ConvexPolygon p = obox_to_polygon(OBox{0, 0, 2, 2, 0});
  ASSERT_EQ(p.size(), 4u);
  EXPECT_TRUE(has_vertex(p, 1, 1));
  EXPECT_TRUE(has_vertex(p, -1, 1));
  EXPECT_TRUE(has_vertex(p, -1, -1));
  EXPECT_TRUE(has_vertex(p, 1, -1));
  EXPECT_GT(signed_area(p.vertices()), 0.0);
}

TEST(Geom, QuarterTurnSquareSameVertexSet) {
  const ConvexPolygon p = obox_to_polygon(make_obox(0, 0, 2, 2, kPi / 2));
  ASSERT_EQ(p.size(), 4u);
  for (auto [x, y] : {std::pair{1.0, 1.0}, {-1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}}) {
    EXPECT_TRUE(has_vertex(p, x, y, 1e-12)) << x << "," << y;
  }
}

TEST(Geom, RotatedRectangleCorner) {
  // (+1, +0.5) rotated by 45 degrees.
  const ConvexPolygon p = obox_to_polygon(OBox{0, 0, 2, 1, kPi / 4});
  ASSERT_EQ(p.size(), 4u);
  EXPECT_TRUE(has_vertex(p, 0.3535533906, 1.0606601718, 1e-9));
  EXPECT_NEAR(polygon_area(p), 2.0, 1e-12);
}

TEST(Geom, DegenerateBoxIsEmptyPolygon) {
  EXPECT_TRUE(obox_to_polygon(OBox{0, 0, 0, 5, 0.3}).empty());
  EXPECT_DOUBLE_EQ(polygon_area(obox_to_polygon(OBox{0, 0, 3, 0, 0})), 0.0);
}

TEST(Geom, PolygonArea) {
  EXPECT_DOUBLE_EQ(polygon_area(ConvexPolygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}})), 1.0);
  EXPECT_DOUBLE_EQ(polygon_area(ConvexPolygon{}), 0.0);
  EXPECT_DOUBLE_EQ(polygon_area(ConvexPolygon({{0, 0}, {2, 0}, {0, 2}})), 2.0);
  // Clockwise input is flipped, not negated.
  EXPECT_DOUBLE_EQ(polygon_area(ConvexPolygon({{0, 0}, {0, 2}, {2, 0}})), 2.0);
}

TEST(Geom, PolygonNormalizationDropsCollinearAndDuplicates) {
  const ConvexPolygon p({{0, 0}, {1, 0}, {2, 0}, {2, 0}, {2, 2}, {0, 2}, {0, 1e-12}});
  EXPECT_EQ(p.size(), 4u);
  EXPECT_DOUBLE_EQ(polygon_area(p), 4.0);
  EXPECT_TRUE(ConvexPolygon({{0, 0}, {1, 1}, {2, 2}}).empty());
}

TEST(Geom, ClipIdempotent) {
  const ConvexPolygon sq = obox_to_polygon(OBox{3, -2, 5, 7, 0.4});
  EXPECT_NEAR(polygon_area(convex_clip(sq, sq)), polygon_area(sq), 1e-12);
}

TEST(Geom, ClipDisjointIsEmpty) {
  const ConvexPolygon a = obox_to_polygon(OBox{0, 0, 1, 1, 0});
  const ConvexPolygon b = obox_to_polygon(OBox{5, 5, 1, 1, 0});
  EXPECT_TRUE(convex_clip(a, b).empty());
}

TEST(Geom, ClipOctagon) {
  const ConvexPolygon a = obox_to_polygon(OBox{0, 0, 1, 1, 0});
  const ConvexPolygon b = obox_to_polygon(OBox{0, 0, 1, 1, kPi / 4});
  const ConvexPolygon oct = convex_clip(a, b);
  EXPECT_EQ(oct.size(), 8u);
  EXPECT_NEAR(polygon_area(oct), kOctagonArea, 1e-12);
}

TEST(Geom, IouObbExamples) {
  const OBox a{10, 10, 6, 3, 0.2};
  EXPECT_NEAR(iou_obb(a, a), 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(iou_obb(a, OBox{100, 100, 6, 3, 0.2}), 0.0);
  EXPECT_NEAR(iou_obb(OBox{0, 0, 1, 1, 0}, OBox{0, 0, 1, 1, kPi / 4}), 1.0 / std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(kOctagonArea / (2.0 - kOctagonArea), 0.707107, 1e-6);
}

TEST(Geom, IouDegenerateIsZero) {
  const OBox line{0, 0, 4, 0, 0};
  EXPECT_DOUBLE_EQ(iou_obb(line, line), 0.0);
  EXPECT_DOUBLE_EQ(iou_obb(line, OBox{0, 0, 4, 4, 0}), 0.0);
  EXPECT_DOUBLE_EQ(iou_hbb(HBox{0, 0, 0, 0}, HBox{0, 0, 0, 0}), 0.0);
}

TEST(Geom, IouHbbExamples) {
  const HBox a{0, 0, 16, 16};
  EXPECT_DOUBLE_EQ(iou_hbb(a, a), 1.0);
  EXPECT_NEAR(iou_hbb(a, HBox{4, 4, 20, 20}), 144.0 / 368.0, 1e-15);
  EXPECT_NEAR(iou_hbb(a, HBox{4, 4, 20, 20}), 0.391304, 1e-6);
  EXPECT_DOUBLE_EQ(iou_hbb(a, HBox{16, 0, 32, 16}), 0.0);
}

TEST(Geom, RasterOracle) {
  const OBox sq{0, 0, 1, 1, 0};
  EXPECT_NEAR(iou_raster_oracle(sq, sq, 256), 1.0, 0.01);
  EXPECT_NEAR(iou_raster_oracle(sq, OBox{0, 0, 1, 1, kPi / 4}, 512), 0.7071, 0.01);
  EXPECT_DOUBLE_EQ(iou_raster_oracle(sq, OBox{9, 9, 1, 1, 0}, 128), 0.0);
  EXPECT_THROW(iou_raster_oracle(sq, sq, 63), Error);
}

TEST(GeomProperty, SymmetryRangeIdentityRotation) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  for (int n = 0; n < 2000; ++n) {
    const OBox a = oracle::random_box(rng, 1.0, 60.0, 80.0);
    const OBox b = oracle::random_box(rng, 1.0, 60.0, 80.0);
    const double ab = iou_obb(a, b);
    EXPECT_EQ(ab, iou_obb(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_NEAR(iou_obb(a, a), 1.0, 1e-9);

    const Point pivot{40.0, 40.0};
    const double t = ang(rng);
    EXPECT_NEAR(iou_obb(rotate_about(a, pivot, t), rotate_about(b, pivot, t)), ab, 1e-6);
  }
}

TEST(GeomProperty, AxisAlignedMatchesHbb) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(0.0, 50.0);
  std::uniform_real_distribution<double> ext(0.5, 40.0);
  for (int n = 0; n < 2000; ++n) {
    const OBox a{pos(rng), pos(rng), ext(rng), ext(rng), 0.0};
    const OBox b{pos(rng), pos(rng), ext(rng), ext(rng), 0.0};
    EXPECT_NEAR(iou_obb(a, b), iou_hbb(enclosing_hbox(a), enclosing_hbox(b)), 1e-9);
  }
}

TEST(GeomProperty, AgreesWithRasterOracle) {
  std::mt19937_64 rng(23);
  for (int n = 0; n < 100; ++n) {
    const OBox a = oracle::random_box(rng, 4.0, 64.0, 64.0);
    const OBox b = oracle::random_box(rng, 4.0, 64.0, 64.0);
    EXPECT_NEAR(iou_obb(a, b), iou_raster_oracle(a, b, 256), 1e-2);
  }
}

TEST(Geom, ConvexHull) {
  const auto hull = convex_hull({{0, 0}, {2, 0}, {1, 1}, {2, 2}, {0, 2}, {1, 0}});
  ASSERT_EQ(hull.size(), 4u);
  EXPECT_DOUBLE_EQ(signed_area(hull), 4.0);
  EXPECT_EQ(convex_hull({{0, 0}, {1, 1}, {2, 2}}).size(), 2u);
}
