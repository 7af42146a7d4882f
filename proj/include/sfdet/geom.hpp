#pragma once

#include <numbers>
#include <vector>

namespace sfdet {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned box in pixel coordinates.
struct HBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
};

/// Oriented box: center, extents, rotation in radians.
///
/// `w` is the extent along the rotated x axis and `h` along the rotated y
/// axis. `theta` lives in [-pi/2, pi/2); `make_obox` normalizes it.
struct OBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double theta = 0.0;

  double area() const { return w * h; }
  bool degenerate() const { return !(w > 0.0) || !(h > 0.0); }
};

inline constexpr double kPi = std::numbers::pi;

/// Merge distance for clipped vertices and tolerance of the side test.
inline constexpr double kGeomEps = 1e-9;

/// Wraps an angle into [-pi/2, pi/2).
double normalize_angle(double theta);

/// Builds an OBox with a normalized angle. Throws on negative extents.
OBox make_obox(double cx, double cy, double w, double h, double theta);

OBox obox_from_hbox(const HBox& b);
HBox enclosing_hbox(const OBox& b);

/// Convex polygon with counter-clockwise vertices, or empty.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;

  /// Takes arbitrary convex input: merges near-duplicate vertices, drops
  /// collinear ones and flips clockwise input. Collapses to empty if the
  /// result has no positive area.
  explicit ConvexPolygon(std::vector<Point> vertices);

  const std::vector<Point>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }

 private:
  std::vector<Point> vertices_;
};

double cross(const Point& o, const Point& a, const Point& b);

/// Signed shoelace area of an arbitrary vertex ring (positive when CCW).
double signed_area(const std::vector<Point>& ring);

/// Corners of `b` in CCW order. Degenerate boxes give an empty polygon.
ConvexPolygon obox_to_polygon(const OBox& b);
ConvexPolygon hbox_to_polygon(const HBox& b);

double polygon_area(const ConvexPolygon& p);

/// Sutherland-Hodgman clip of `subject` against every edge of `clip`.
ConvexPolygon convex_clip(const ConvexPolygon& subject, const ConvexPolygon& clip);

/// Convex hull (Andrew's monotone chain), CCW, collinear points removed.
std::vector<Point> convex_hull(std::vector<Point> points);

double iou_obb(const OBox& a, const OBox& b);
double iou_hbb(const HBox& a, const HBox& b);

/// Grid point-in-box estimate of IoU; a test oracle independent of the
/// polygon clipper. Samples `resolution` x `resolution` cell centers over
/// the joint bounding region. Throws if resolution < 64.
double iou_raster_oracle(const OBox& a, const OBox& b, int resolution);

/// Rotates `b` about `pivot` by `angle` radians (angle normalized).
OBox rotate_about(const OBox& b, const Point& pivot, double angle);

}  // namespace sfdet
