#pragma once

// Deterministic inputs shared by the unit tests and the acceptance suite.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sfdet/geom.hpp"

namespace sfdet::fixture {

// Twenty objects of assorted sizes and angles inside a 256 x 256 image.
inline std::vector<OBox> fixture_objects() {
  std::vector<OBox> objs;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(20.0, 236.0);
  std::uniform_real_distribution<double> ang(-kPi / 2, kPi / 2);
  const double sizes[] = {6, 9, 12, 16, 20, 24, 30, 40, 48, 60};
  for (int n = 0; n < 20; ++n) {
    const double s = sizes[n % 10];
    const double aspect = n % 3 == 0 ? 1.0 : (n % 3 == 1 ? 0.5 : 2.0);
    objs.push_back(OBox{pos(rng), pos(rng), s * std::sqrt(aspect), s / std::sqrt(aspect), n < 10 ? 0.0 : ang(rng)});
  }
  return objs;
}

// DOTA label text with a header and `lines` rotated rectangles.
inline std::string random_label_text(std::mt19937_64& rng, int lines) {
  const char* cats[] = {"plane", "ship", "small-vehicle", "large-vehicle", "harbor"};
  std::uniform_real_distribution<double> pos(0.0, 4000.0), ext(2.0, 300.0), ang(-3.14, 3.14);
  std::string text = "imagesource:GoogleEarth\ngsd:0.146343590398\n";
  for (int n = 0; n < lines; ++n) {
    const double cx = pos(rng), cy = pos(rng), w = ext(rng), h = ext(rng), t = ang(rng);
    const double c = std::cos(t), s = std::sin(t);
    const double local[4][2] = {{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}};
    for (const auto& l : local) text += fmt::format("{:.1f} {:.1f} ", cx + l[0] * c - l[1] * s, cy + l[0] * s + l[1] * c);
    text += fmt::format("{} {}\n", cats[n % 5], n % 2);
  }
  return text;
}

}  // namespace sfdet::fixture
