#include "sfdet/geom.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "sfdet/error.hpp"

namespace sfdet {

namespace {

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Distance-scaled side test: positive when p is left of a->b.
double side(const Point& a, const Point& b, const Point& p) {
  const double len = dist(a, b);
  if (len <= 0.0) return 0.0;
  return cross(a, b, p) / len;
}

Point line_intersection(const Point& p, const Point& q, const Point& a, const Point& b) {
  // Segment p->q against the infinite line a->b.
  const double sp = cross(a, b, p);
  const double sq = cross(a, b, q);
  const double denom = sp - sq;
  if (denom == 0.0) return q;
  const double t = sp / denom;
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

bool hboxes_disjoint(const HBox& a, const HBox& b) {
  return a.x_max <= b.x_min || b.x_max <= a.x_min || a.y_max <= b.y_min || b.y_max <= a.y_min;
}

}  // namespace

double normalize_angle(double theta) {
  double t = std::fmod(theta + kPi / 2.0, kPi);
  if (t < 0.0) t += kPi;
  if (t >= kPi) t -= kPi;
  return t - kPi / 2.0;
}

OBox make_obox(double cx, double cy, double w, double h, double theta) {
  if (!(w >= 0.0) || !(h >= 0.0)) throw Error("OBox extents must be non-negative");
  return OBox{cx, cy, w, h, normalize_angle(theta)};
}

OBox obox_from_hbox(const HBox& b) {
  return OBox{(b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0, b.width(), b.height(), 0.0};
}

HBox enclosing_hbox(const OBox& b) {
  const double c = std::abs(std::cos(b.theta));
  const double s = std::abs(std::sin(b.theta));
  const double half_w = (b.w * c + b.h * s) / 2.0;
  const double half_h = (b.w * s + b.h * c) / 2.0;
  return HBox{b.cx - half_w, b.cy - half_h, b.cx + half_w, b.cy + half_h};
}

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double signed_area(const std::vector<Point>& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = ring[i];
    const Point& q = ring[(i + 1) % n];
    acc += p.x * q.y - q.x * p.y;
  }
  return acc / 2.0;
}

ConvexPolygon::ConvexPolygon(std::vector<Point> vertices) {
  if (vertices.size() < 3) return;
  if (signed_area(vertices) < 0.0) std::reverse(vertices.begin(), vertices.end());

  std::vector<Point> merged;
  merged.reserve(vertices.size());
  for (const Point& p : vertices) {
    if (merged.empty() || dist(merged.back(), p) > kGeomEps) merged.push_back(p);
  }
  while (merged.size() > 1 && dist(merged.front(), merged.back()) <= kGeomEps) merged.pop_back();

  bool changed = true;
  while (changed && merged.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < merged.size() && merged.size() >= 3; ++i) {
      const std::size_t n = merged.size();
      const Point& prev = merged[(i + n - 1) % n];
      const Point& next = merged[(i + 1) % n];
      if (std::abs(side(prev, next, merged[i])) <= kGeomEps) {
        merged.erase(merged.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }

  if (merged.size() < 3 || signed_area(merged) <= kGeomEps) return;
  vertices_ = std::move(merged);
}

ConvexPolygon obox_to_polygon(const OBox& b) {
  if (b.degenerate()) return {};
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double hw = b.w / 2.0;
  const double hh = b.h / 2.0;
  // Local corners in CCW order: (+,+), (-,+), (-,-), (+,-).
  const double local[4][2] = {{hw, hh}, {-hw, hh}, {-hw, -hh}, {hw, -hh}};
  std::vector<Point> pts;
  pts.reserve(4);
  for (const auto& l : local) {
    pts.push_back({b.cx + l[0] * c - l[1] * s, b.cy + l[0] * s + l[1] * c});
  }
  return ConvexPolygon(std::move(pts));
}

ConvexPolygon hbox_to_polygon(const HBox& b) {
  return ConvexPolygon({{b.x_min, b.y_min}, {b.x_max, b.y_min}, {b.x_max, b.y_max}, {b.x_min, b.y_max}});
}

double polygon_area(const ConvexPolygon& p) { return p.size() < 3 ? 0.0 : signed_area(p.vertices()); }

ConvexPolygon convex_clip(const ConvexPolygon& subject, const ConvexPolygon& clip) {
  if (subject.empty() || clip.empty()) return {};
  std::vector<Point> output = subject.vertices();
  const auto& edges = clip.vertices();
  const std::size_t m = edges.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Point& a = edges[e];
    const Point& b = edges[(e + 1) % m];
    std::vector<Point> input;
    input.swap(output);
    const std::size_t n = input.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& cur = input[i];
      const Point& prev = input[(i + n - 1) % n];
      const bool cur_in = side(a, b, cur) >= -kGeomEps;
      const bool prev_in = side(a, b, prev) >= -kGeomEps;
      if (cur_in) {
        if (!prev_in) output.push_back(line_intersection(prev, cur, a, b));
        output.push_back(cur);
      } else if (prev_in) {
        output.push_back(line_intersection(prev, cur, a, b));
      }
    }
  }
  return ConvexPolygon(std::move(output));
}

std::vector<Point> convex_hull(std::vector<Point> points) {
  std::sort(points.begin(), points.end(),
            [](const Point& a, const Point& b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }),
               points.end());
  if (points.size() < 3) return points;

  std::vector<Point> hull(2 * points.size());
  std::size_t k = 0;
  for (const Point& p : points) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

double iou_hbb(const HBox& a, const HBox& b) {
  const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_obb(const OBox& a, const OBox& b) {
  if (a.degenerate() || b.degenerate()) return 0.0;
  // Fixed argument order makes the result exactly symmetric.
  const bool swap = std::tie(b.cx, b.cy, b.w, b.h, b.theta) < std::tie(a.cx, a.cy, a.w, a.h, a.theta);
  const OBox& first = swap ? b : a;
  const OBox& second = swap ? a : b;
  if (hboxes_disjoint(enclosing_hbox(first), enclosing_hbox(second))) return 0.0;

  const double inter = polygon_area(convex_clip(obox_to_polygon(first), obox_to_polygon(second)));
  const double uni = first.area() + second.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_raster_oracle(const OBox& a, const OBox& b, int resolution) {
  if (resolution < 64) throw Error("raster oracle resolution must be >= 64");
  if (a.degenerate() || b.degenerate()) return 0.0;

  const HBox ha = enclosing_hbox(a);
  const HBox hb = enclosing_hbox(b);
  const HBox region{std::min(ha.x_min, hb.x_min), std::min(ha.y_min, hb.y_min), std::max(ha.x_max, hb.x_max),
                    std::max(ha.y_max, hb.y_max)};
  const double step_x = region.width() / resolution;
  const double step_y = region.height() / resolution;

  struct Frame {
    double cx, cy, c, s, hw, hh;
    bool contains(double x, double y) const {
      const double dx = x - cx;
      const double dy = y - cy;
      return std::abs(dx * c + dy * s) <= hw && std::abs(-dx * s + dy * c) <= hh;
    }
  };
  const Frame fa{a.cx, a.cy, std::cos(a.theta), std::sin(a.theta), a.w / 2.0, a.h / 2.0};
  const Frame fb{b.cx, b.cy, std::cos(b.theta), std::sin(b.theta), b.w / 2.0, b.h / 2.0};

  long long in_a = 0, in_b = 0, in_both = 0;
  for (int iy = 0; iy < resolution; ++iy) {
    const double y = region.y_min + (iy + 0.5) * step_y;
    for (int ix = 0; ix < resolution; ++ix) {
      const double x = region.x_min + (ix + 0.5) * step_x;
      const bool pa = fa.contains(x, y);
      const bool pb = fb.contains(x, y);
      in_a += pa;
      in_b += pb;
      in_both += pa && pb;
    }
  }
  const long long uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(uni);
}

OBox rotate_about(const OBox& b, const Point& pivot, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double dx = b.cx - pivot.x;
  const double dy = b.cy - pivot.y;
  return OBox{pivot.x + dx * c - dy * s, pivot.y + dx * s + dy * c, b.w, b.h, normalize_angle(b.theta + angle)};
}

}  // namespace sfdet
