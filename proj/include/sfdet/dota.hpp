#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "sfdet/geom.hpp"

namespace sfdet {

/// One DOTA object: a quadrilateral, its category and difficulty flag.
/// Parsed quads are reordered into a simple, counter-clockwise ring.
struct Annotation {
  std::array<Point, 4> quad{};
  std::string category;
  int difficulty = 0;
};

bool operator==(const Annotation& a, const Annotation& b);

/// Parses DOTA v1.x label text. "imagesource:" and "gsd:" header lines and
/// blank lines are skipped. Throws sfdet::Error naming the offending line.
std::vector<Annotation> parse_annotations(const std::string& text);

/// Writes one object per line; coordinates use the shortest round-trip
/// decimal form so parsing the output reproduces the input exactly.
std::string serialize_annotations(const std::vector<Annotation>& annos);

std::vector<Annotation> load_annotation_file(const std::string& path);

double quad_area(const Annotation& a);

/// Minimum-area enclosing rectangle of the quad (rotating calipers over its
/// hull). Among equal-area candidates the one with the smallest |theta| wins.
/// Collinear or coincident points give a zero-area box.
OBox quad_to_obox(const Annotation& a);

struct TileWindow {
  double x_offset = 0.0;
  double y_offset = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Windows of `patch` pixels stepping by patch - overlap, row-major; the
/// last window on each axis is pulled back to end on the image border. An
/// axis shorter than the patch gets one window of the image's length.
std::vector<TileWindow> tile_plan(int image_w, int image_h, int patch, int overlap);

/// Same plan expressed by step instead of overlap (overlap = patch - step).
std::vector<TileWindow> tile_plan_by_step(int image_w, int image_h, int patch, int step);

/// Keeps annotations whose quad covers at least `min_area_fraction` of its
/// area inside the window, shifted into window coordinates. Quads are not
/// truncated.
std::vector<Annotation> clip_annotations(const std::vector<Annotation>& annos, const TileWindow& window,
                                         double min_area_fraction = 0.5);

struct SizeHistogram {
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;  // counts[b] covers [edges[b], edges[b+1])
  std::size_t underflow = 0;
  std::size_t overflow = 0;
};

/// Histogram of sqrt(area) of each object's minimum-area rectangle.
SizeHistogram size_histogram(const std::vector<Annotation>& annos, const std::vector<double>& bin_edges);

}  // namespace sfdet
