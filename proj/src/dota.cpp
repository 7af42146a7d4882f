#include "sfdet/dota.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "sfdet/error.hpp"

namespace sfdet {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos > start) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double d1 = cross(a, b, c);
  const double d2 = cross(a, b, d);
  const double d3 = cross(c, d, a);
  const double d4 = cross(c, d, b);
  return ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0));
}

void normalize_quad(std::array<Point, 4>& q) {
  if (segments_cross(q[0], q[1], q[2], q[3]) || segments_cross(q[1], q[2], q[3], q[0])) {
    // Bow-tie: order by angle about the centroid, keeping vertex 0 first.
    const Point c{(q[0].x + q[1].x + q[2].x + q[3].x) / 4.0, (q[0].y + q[1].y + q[2].y + q[3].y) / 4.0};
    const auto angle = [&](const Point& p) { return std::atan2(p.y - c.y, p.x - c.x); };
    const double a0 = angle(q[0]);
    std::sort(q.begin() + 1, q.end(), [&](const Point& a, const Point& b) {
      const auto rel = [&](const Point& p) {
        double d = angle(p) - a0;
        if (d < 0.0) d += 2.0 * kPi;
        return d;
      };
      return rel(a) < rel(b);
    });
  }
  const std::vector<Point> ring(q.begin(), q.end());
  if (signed_area(ring) < 0.0) std::swap(q[1], q[3]);
}

void append_number(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

bool operator==(const Annotation& a, const Annotation& b) {
  for (std::size_t n = 0; n < 4; ++n) {
    if (a.quad[n].x != b.quad[n].x || a.quad[n].y != b.quad[n].y) return false;
  }
  return a.category == b.category && a.difficulty == b.difficulty;
}

std::vector<Annotation> parse_annotations(const std::string& text) {
  std::vector<Annotation> out;
  std::istringstream lines(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(lines, raw)) {
    ++line_no;
    const std::vector<std::string_view> tok = split_ws(raw);
    if (tok.empty()) continue;
    if (starts_with(tok[0], "imagesource:") || starts_with(tok[0], "gsd:")) continue;
    const std::string where = "annotation line " + std::to_string(line_no);
    if (tok.size() != 10) {
      throw Error(where + ": expected 8 coordinates, category and difficulty, got " + std::to_string(tok.size()) +
                  " fields");
    }
    Annotation a;
    for (std::size_t n = 0; n < 8; ++n) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok[n].data(), tok[n].data() + tok[n].size(), v);
      if (ec != std::errc() || ptr != tok[n].data() + tok[n].size() || !std::isfinite(v)) {
        throw Error(where + ": non-numeric coordinate '" + std::string(tok[n]) + "'");
      }
      (n % 2 == 0 ? a.quad[n / 2].x : a.quad[n / 2].y) = v;
    }
    a.category = std::string(tok[8]);
    const auto [ptr, ec] = std::from_chars(tok[9].data(), tok[9].data() + tok[9].size(), a.difficulty);
    if (ec != std::errc() || ptr != tok[9].data() + tok[9].size()) {
      throw Error(where + ": bad difficulty '" + std::string(tok[9]) + "'");
    }
    normalize_quad(a.quad);
    out.push_back(std::move(a));
  }
  return out;
}

std::string serialize_annotations(const std::vector<Annotation>& annos) {
  std::string out;
  for (const Annotation& a : annos) {
    for (const Point& p : a.quad) {
      append_number(out, p.x);
      out += ' ';
      append_number(out, p.y);
      out += ' ';
    }
    out += a.category;
    out += ' ';
    out += std::to_string(a.difficulty);
    out += '\n';
  }
  return out;
}

std::vector<Annotation> load_annotation_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return parse_annotations(text);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

double quad_area(const Annotation& a) { return std::abs(signed_area({a.quad.begin(), a.quad.end()})); }

OBox quad_to_obox(const Annotation& a) {
  const std::vector<Point> hull = convex_hull({a.quad.begin(), a.quad.end()});
  if (hull.size() == 1) return OBox{hull[0].x, hull[0].y, 0.0, 0.0, 0.0};
  if (hull.size() == 2) {
    const double dx = hull[1].x - hull[0].x;
    const double dy = hull[1].y - hull[0].y;
    return OBox{(hull[0].x + hull[1].x) / 2.0, (hull[0].y + hull[1].y) / 2.0, std::hypot(dx, dy), 0.0,
                normalize_angle(std::atan2(dy, dx))};
  }

  OBox best;
  double best_area = -1.0;
  for (std::size_t e = 0; e < hull.size(); ++e) {
    const Point& p = hull[e];
    const Point& q = hull[(e + 1) % hull.size()];
    const double len = std::hypot(q.x - p.x, q.y - p.y);
    const double ux = (q.x - p.x) / len;
    const double uy = (q.y - p.y) / len;
    double min_u = 0.0, max_u = 0.0, min_v = 0.0, max_v = 0.0;
    for (const Point& r : hull) {
      const double u = (r.x - p.x) * ux + (r.y - p.y) * uy;
      const double v = -(r.x - p.x) * uy + (r.y - p.y) * ux;
      min_u = std::min(min_u, u);
      max_u = std::max(max_u, u);
      min_v = std::min(min_v, v);
      max_v = std::max(max_v, v);
    }
    const double w = max_u - min_u;
    const double h = max_v - min_v;
    const double area = w * h;
    const double mu = (min_u + max_u) / 2.0;
    const double mv = (min_v + max_v) / 2.0;
    const OBox cand{p.x + mu * ux - mv * uy, p.y + mu * uy + mv * ux, w, h, normalize_angle(std::atan2(uy, ux))};

    const double tol = 1e-9 * std::max(1.0, best_area);
    if (best_area < 0.0 || area < best_area - tol ||
        (area <= best_area + tol && std::abs(cand.theta) < std::abs(best.theta) - 1e-12)) {
      best = cand;
      best_area = area;
    }
  }
  return best;
}

std::vector<TileWindow> tile_plan(int image_w, int image_h, int patch, int overlap) {
  if (image_w <= 0 || image_h <= 0) throw Error("tile_plan: image dims must be positive");
  if (overlap < 0 || patch <= overlap) throw Error("tile_plan: need patch > overlap >= 0");

  const auto offsets = [&](int extent) {
    std::vector<int> out;
    if (extent <= patch) return std::vector<int>{0};
    const int step = patch - overlap;
    int off = 0;
    while (true) {
      out.push_back(off);
      if (off + patch >= extent) break;
      off += step;
      if (off + patch > extent) off = extent - patch;
    }
    return out;
  };

  const std::vector<int> xs = offsets(image_w);
  const std::vector<int> ys = offsets(image_h);
  const double win_w = std::min(patch, image_w);
  const double win_h = std::min(patch, image_h);
  std::vector<TileWindow> plan;
  plan.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) plan.push_back({static_cast<double>(x), static_cast<double>(y), win_w, win_h});
  }
  return plan;
}

std::vector<TileWindow> tile_plan_by_step(int image_w, int image_h, int patch, int step) {
  if (step <= 0 || step > patch) throw Error("tile_plan: need 0 < step <= patch");
  return tile_plan(image_w, image_h, patch, patch - step);
}

std::vector<Annotation> clip_annotations(const std::vector<Annotation>& annos, const TileWindow& window,
                                         double min_area_fraction) {
  if (!(min_area_fraction >= 0.0 && min_area_fraction <= 1.0)) {
    throw Error("clip_annotations: min_area_fraction must lie in [0, 1]");
  }
  const HBox box{window.x_offset, window.y_offset, window.x_offset + window.width, window.y_offset + window.height};
  const ConvexPolygon win = hbox_to_polygon(box);

  std::vector<Annotation> out;
  for (const Annotation& a : annos) {
    const double area = quad_area(a);
    bool keep = false;
    if (area <= 0.0) {
      keep = std::all_of(a.quad.begin(), a.quad.end(), [&](const Point& p) {
        return p.x >= box.x_min && p.x <= box.x_max && p.y >= box.y_min && p.y <= box.y_max;
      });
    } else {
      const ConvexPolygon hull(convex_hull({a.quad.begin(), a.quad.end()}));
      const double inter = polygon_area(convex_clip(hull, win));
      keep = inter >= min_area_fraction * area * (1.0 - 1e-12);
    }
    if (!keep) continue;
    Annotation shifted = a;
    for (Point& p : shifted.quad) {
      p.x -= window.x_offset;
      p.y -= window.y_offset;
    }
    out.push_back(std::move(shifted));
  }
  return out;
}

SizeHistogram size_histogram(const std::vector<Annotation>& annos, const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 2) throw Error("size_histogram needs at least two bin edges");
  if (!std::is_sorted(bin_edges.begin(), bin_edges.end()) ||
      std::adjacent_find(bin_edges.begin(), bin_edges.end()) != bin_edges.end()) {
    throw Error("size_histogram: bin edges must ascend strictly");
  }
  SizeHistogram h{bin_edges, std::vector<std::size_t>(bin_edges.size() - 1, 0), 0, 0};
  for (const Annotation& a : annos) {
    const double side = std::sqrt(quad_to_obox(a).area());
    if (side < bin_edges.front()) {
      ++h.underflow;
    } else if (side >= bin_edges.back()) {
      ++h.overflow;
    } else {
      const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), side);
      ++h.counts[static_cast<std::size_t>(it - bin_edges.begin()) - 1];
    }
  }
  return h;
}

}  // namespace sfdet
