#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "vexel/common.hpp"
#include "vexel/document.hpp"
#include "vexel/raster.hpp"

namespace vexel::testing {

/// Star-shaped closed path around (cx, cy): k anchors at evenly spaced
/// angles with jittered radii, handles on the circle arcs between them.
inline CubicPath random_blob(Rng& rng, double cx, double cy, double r_min, double r_max, int segments) {
  std::vector<Point> pts;
  const double step = 2.0 * std::numbers::pi / segments;
  const double phase = rng.uniform(0.0, step);
  std::vector<double> radii(segments);
  for (auto& r : radii) r = rng.uniform(r_min, r_max);
  for (int i = 0; i < segments; ++i) {
    const double a0 = phase + i * step;
    const double a1 = a0 + step;
    const double r0 = radii[i];
    const double r1 = radii[(i + 1) % segments];
    pts.push_back({cx + r0 * std::cos(a0), cy + r0 * std::sin(a0)});
    const double rh0 = r0 * rng.uniform(0.9, 1.2);
    const double rh1 = r1 * rng.uniform(0.9, 1.2);
    pts.push_back({cx + rh0 * std::cos(a0 + step / 3.0), cy + rh0 * std::sin(a0 + step / 3.0)});
    pts.push_back({cx + rh1 * std::cos(a1 - step / 3.0), cy + rh1 * std::sin(a1 - step / 3.0)});
  }
  return CubicPath(std::move(pts));
}

/// Random document of `count` translucent blobs split across two rounds.
inline VectorDocument random_document(std::uint64_t seed, int count, int width, int height) {
  Rng rng(seed);
  VectorDocument doc;
  doc.width = width;
  doc.height = height;
  doc.rounds.resize(2);
  doc.rounds[0].precision = 10;
  doc.rounds[1].precision = 30;
  for (int i = 0; i < count; ++i) {
    const double r_max = rng.uniform(0.12, 0.3) * std::min(width, height);
    PathElement e;
    e.path = random_blob(rng, rng.uniform(0.2, 0.8) * width, rng.uniform(0.2, 0.8) * height, 0.5 * r_max, r_max,
                         rng.uniform_int(2, 5));
    e.fill = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.4, 0.95)};
    e.id = i;
    doc.rounds[i < count / 2 ? 0 : 1].elements.push_back(std::move(e));
  }
  return doc;
}

/// Random multi-round document for serialization tests: arbitrary canvas,
/// control points overhanging the canvas, sparse ids and optional regions.
inline VectorDocument random_svg_document(std::uint64_t seed) {
  Rng rng(seed);
  const int w = rng.uniform_int(1, 600), h = rng.uniform_int(1, 600);
  VectorDocument doc;
  doc.width = w;
  doc.height = h;
  doc.rounds.resize(rng.uniform_int(0, 3));
  ElementId id = rng.uniform_int(0, 5);
  for (auto& round : doc.rounds) {
    round.precision = rng.uniform_int(1, 40);
    if (rng.uniform() < 0.3) round.region = PixelRect{rng.uniform_int(0, 10), rng.uniform_int(0, 10), 5, 7};
    const int n = rng.uniform_int(0, 4);
    for (int i = 0; i < n; ++i) {
      std::vector<Point> pts(3 * rng.uniform_int(1, 6));
      for (auto& p : pts) p = {rng.uniform(-50.0, w + 50.0), rng.uniform(-50.0, h + 50.0)};
      round.elements.push_back({CubicPath(pts), {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()}, id});
      id += rng.uniform_int(1, 3);
    }
  }
  return doc;
}

inline Raster random_raster(std::uint64_t seed, int width, int height, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Raster r(width, height);
  for (auto& v : r.pixels) v = rng.uniform(lo, hi);
  return r;
}

inline double dot(const Raster& a, const Raster& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) s += a.pixels[i] * b.pixels[i];
  return s;
}

}  // namespace vexel::testing
