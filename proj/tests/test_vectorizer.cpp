#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/synthetic.hpp"
#include "vexel/rasterizer.hpp"
#include "vexel/vectorizer.hpp"

using namespace vexel;

namespace {

LabelMap labels_from(const std::vector<std::string>& rows) {
  LabelMap m;
  m.height = int(rows.size());
  m.width = int(rows[0].size());
  for (const auto& r : rows)
    for (char c : r) m.labels.push_back(c == '#' ? 1 : 0);
  return m;
}

Raster two_color_image() {
  Raster img(8, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) {
      const bool left = x < 4;
      const double jitter = ((x + y) % 2) * 0.02;
      img.at(x, y, 0) = left ? 0.1 + jitter : 0.9 - jitter;
      img.at(x, y, 1) = left ? 0.2 : 0.8;
      img.at(x, y, 2) = left ? 0.3 : 0.7;
    }
  return img;
}

}  // namespace

TEST_CASE("few distinct colors become the palette, sorted by luminance") {
  Raster img(3, 1);
  const double cols[3][3] = {{1, 1, 1}, {0, 0, 0}, {0, 1, 0}};
  for (int x = 0; x < 3; ++x)
    for (int c = 0; c < 3; ++c) img.at(x, 0, c) = cols[x][c];
  const auto q = quantize_colors(img, 10, 0);
  REQUIRE(q.palette.size() == 3);
  CHECK(q.palette[0].g == 0.0);
  CHECK(q.palette[1].g == 1.0);
  CHECK(q.palette[1].r == 0.0);
  CHECK(q.palette[2].r == 1.0);
  CHECK(q.labels.labels == std::vector<int>{2, 0, 1});
  CHECK_THROWS_AS(quantize_colors(img, 0, 0), Error);
}

TEST_CASE("k-means separates two clusters into their means") {
  const auto img = two_color_image();
  const auto q = quantize_colors(img, 2, 5);
  REQUIRE(q.palette.size() == 2);
  CHECK(q.palette[0].r == doctest::Approx(0.11));
  CHECK(q.palette[1].r == doctest::Approx(0.89));
  CHECK(q.labels.at(0, 0) == 0);
  CHECK(q.labels.at(7, 3) == 1);
  const auto again = quantize_colors(img, 2, 5);
  CHECK(again.labels.labels == q.labels.labels);
}

TEST_CASE("tracing follows pixel edges of 4-connected components") {
  const auto single = trace_components(labels_from({"...", ".#.", "..."}), 1);
  REQUIRE(single.size() == 1);
  CHECK(single[0].pixel_count == 1);
  CHECK(single[0].polygon.size() == 4);
  CHECK(signed_area(single[0].polygon) == 2.0);
  for (const auto& p : single[0].polygon) {
    CHECK((p.x == 1.0 || p.x == 2.0));
    CHECK((p.y == 1.0 || p.y == 2.0));
  }

  const auto ell = trace_components(labels_from({"#..", "#..", "###"}), 1);
  REQUIRE(ell.size() == 1);
  CHECK(ell[0].polygon.size() == 6);
  CHECK(signed_area(ell[0].polygon) == 2.0 * 5);

  // Diagonal neighbours are separate components.
  CHECK(trace_components(labels_from({"#.", ".#"}), 1).size() == 2);

  // A ring is traced by its outer boundary only.
  const auto ring = trace_components(labels_from({"###", "#.#", "###"}), 1);
  REQUIRE(ring.size() == 1);
  CHECK(ring[0].pixel_count == 8);
  CHECK(signed_area(ring[0].polygon) == 2.0 * 9);
}

TEST_CASE("traced areas match pixel counts on random label maps") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    LabelMap m;
    m.width = 12;
    m.height = 9;
    for (int i = 0; i < m.width * m.height; ++i) m.labels.push_back(rng.uniform_int(0, 2));
    std::size_t total = 0;
    for (int c = 0; c < 3; ++c)
      for (const auto& contour : trace_components(m, c)) {
        total += contour.pixel_count;
        CHECK(signed_area(contour.polygon) > 0.0);
        CHECK(signed_area(contour.polygon) >= 2.0 * double(contour.pixel_count));
        for (const auto& p : contour.polygon) {
          CHECK(p.x == std::floor(p.x));
          CHECK(p.y == std::floor(p.y));
        }
      }
    CHECK(total == std::size_t(m.width * m.height));
  }
}

TEST_CASE("simplify_polygon") {
  const Polygon square{{0, 0}, {2, 0}, {4, 0}, {4, 4}, {0, 4}, {0, 2}};
  CHECK(*simplify_polygon(square, 0.0) == square);
  const auto s = simplify_polygon(square, 0.5);
  REQUIRE(s);
  CHECK(s->size() == 4);
  CHECK(std::abs(signed_area(*s)) == 32.0);
  CHECK_FALSE(simplify_polygon({{0, 0}, {1, 0}, {2, 0}, {1, 0}}, 1.0).has_value());
  CHECK(simplify_polygon({{0, 0}, {1, 0}, {2, 0}, {1, 0.1}}, 1.0)->size() == 3);
}

TEST_CASE("fit_beziers keeps polygon vertices within tolerance") {
  const Polygon square{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  const auto sq = fit_beziers(square, 0.5);
  CHECK(sq.segment_count() == 4);
  CHECK(max_vertex_deviation(square, sq) <= 1e-9);

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Polygon circle;
    const int n = rng.uniform_int(8, 40);
    const double r = rng.uniform(5.0, 40.0);
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * std::numbers::pi * i / n;
      circle.push_back({50 + r * std::cos(a) + rng.uniform(-0.3, 0.3), 50 + r * std::sin(a) + rng.uniform(-0.3, 0.3)});
    }
    const double tol = rng.uniform(0.3, 1.5);
    const auto path = fit_beziers(circle, tol);
    CHECK(max_vertex_deviation(circle, path) <= tol + 1e-9);
  }
  CHECK_THROWS_AS(fit_beziers({{0, 0}, {1, 1}}, 1.0), Error);
}

TEST_CASE("contain_in_region shifts and keeps control points inside") {
  const CubicPath local({{0, 0}, {-20, 5}, {-20, 15}, {0, 20}, {10, 25}, {30, 10}});
  const PixelRect region{5, 5, 20, 20};
  const auto path = contain_in_region(local, region);
  CHECK(path[0] == Point{5, 5});
  for (const auto& p : path.points()) {
    CHECK(p.x >= 5.0);
    CHECK(p.x <= 25.0);
    CHECK(p.y >= 5.0);
    CHECK(p.y <= 25.0);
  }
}

TEST_CASE("vectorize builds a covering layered document") {
  const auto img = testing::synthetic_image(1, 64, 48);
  const auto cfg = VectorizeConfig::defaults();
  const auto doc = vectorize(img, cfg);
  REQUIRE(doc.rounds.size() == 2);
  CHECK(doc.width == 64);
  CHECK(doc.rounds[0].precision == 10);
  CHECK(doc.rounds[1].precision == 30);
  const auto& bg = doc.rounds[0].elements.at(0);
  CHECK(bg.path == CubicPath::rectangle({0, 0, 64, 48}));
  const Rgb mean = mean_color(img);
  CHECK(bg.fill.r == mean.r);
  CHECK(bg.fill.a == 1.0);
  CHECK(paint_order(doc) == [&] {
    std::vector<ElementId> ids(doc.element_count());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = ElementId(i);
    return ids;
  }());

  RenderSettings black;
  black.background = {0, 0, 0};
  CHECK(render(doc) == render(doc, black));
  CHECK(psnr(render(doc), img) >= 25.0);
  CHECK(vectorize(img, cfg) == doc);

  // Round 1 elements after the background are ordered by decreasing area.
  const auto& els = doc.rounds[0].elements;
  for (std::size_t i = 2; i < els.size(); ++i) {
    auto area = [](const CubicPath& p) {
      Polygon poly = flatten_path(p, 16);
      return std::abs(signed_area(poly));
    };
    CHECK(area(els[i - 1].path) >= area(els[i].path) * 0.8);
  }
}

TEST_CASE("region rounds stay inside their region") {
  const auto img = testing::synthetic_image(2, 64, 64);
  VectorizeConfig cfg;
  cfg.rounds = {RoundSpec{}, RoundSpec{}};
  cfg.rounds[1].n_colors = 6;
  cfg.rounds[1].region = PixelRect{10, 20, 30, 25};
  const auto doc = vectorize(img, cfg);
  CHECK(doc.rounds[1].region == cfg.rounds[1].region);
  for (const auto& e : doc.rounds[1].elements)
    for (const auto& p : e.path.points()) {
      CHECK(p.x >= 10.0);
      CHECK(p.x <= 40.0);
      CHECK(p.y >= 20.0);
      CHECK(p.y <= 45.0);
    }
  std::set<ElementId> ids;
  for (auto id : paint_order(doc)) ids.insert(id);
  CHECK(ids.size() == doc.element_count());
}

TEST_CASE("vectorize validates its config") {
  const auto img = testing::synthetic_image(3, 32, 32);
  VectorizeConfig cfg;
  CHECK_THROWS_AS(vectorize(img, cfg), Error);
  cfg.rounds = {RoundSpec{}};
  cfg.rounds[0].region = PixelRect{0, 0, 16, 16};
  CHECK_THROWS_AS(vectorize(img, cfg), Error);
  cfg.rounds = {RoundSpec{}, RoundSpec{}};
  cfg.rounds[1].region = PixelRect{20, 20, 16, 16};
  CHECK_THROWS_AS(vectorize(img, cfg), Error);
  cfg.rounds[1].region.reset();
  cfg.rounds[1].n_colors = 0;
  CHECK_THROWS_AS(vectorize(img, cfg), Error);
}
