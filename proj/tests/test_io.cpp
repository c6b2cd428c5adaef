#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "vexel/io/config.hpp"
#include "vexel/io/png.hpp"
#include "vexel/io/svg.hpp"

using namespace vexel;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "vexel_test_io";
  fs::create_directories(dir);
  return dir / name;
}

// Writes raw 8- or 16-bit PNG data with libpng directly.
void write_raw_png(const fs::path& path, int w, int h, int depth, int color_type, const std::vector<unsigned char>& data,
                   int channels) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  REQUIRE(f);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = std::size_t(w) * channels * (depth / 8);
  for (int y = 0; y < h; ++y) png_write_row(png, const_cast<unsigned char*>(&data[y * stride]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

}  // namespace

TEST_CASE("png round trip stays within quantization") {
  const auto img = testing::random_raster(1, 13, 7, 0.0, 1.0);
  const auto path = temp_path("round.png").string();
  write_png(path, img);
  const auto back = read_png(path);
  REQUIRE(back.same_shape(img));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 1.0 / 510 + 1e-12);
}

TEST_CASE("png alpha composites over white and 16-bit is rejected") {
  const auto rgba = temp_path("rgba.png");
  write_raw_png(rgba, 2, 1, 8, PNG_COLOR_TYPE_RGBA, {255, 0, 0, 0, 0, 0, 255, 255}, 4);
  const auto img = read_png(rgba.string());
  CHECK(img.at(0, 0, 0) == 1.0);
  CHECK(img.at(0, 0, 1) == 1.0);
  CHECK(img.at(0, 0, 2) == 1.0);
  CHECK(img.at(1, 0, 2) == 1.0);
  CHECK(img.at(1, 0, 0) == 0.0);

  const auto deep = temp_path("deep.png");
  write_raw_png(deep, 1, 1, 16, PNG_COLOR_TYPE_RGB, std::vector<unsigned char>(6, 0x80), 3);
  CHECK_THROWS_WITH_AS(read_png(deep.string()), doctest::Contains("16-bit"), Error);

  CHECK_THROWS_WITH_AS(read_png("/nonexistent/img.png"), doctest::Contains("/nonexistent/img.png"), Error);
  const auto junk = temp_path("junk.png");
  std::ofstream(junk) << "not a png";
  CHECK_THROWS_WITH_AS(read_png(junk.string()), doctest::Contains("junk.png"), Error);
}

TEST_CASE("svg serialization format") {
  VectorDocument doc;
  doc.width = 4;
  doc.height = 3;
  doc.rounds.resize(2);
  doc.rounds[0].precision = 10;
  doc.rounds[0].elements.push_back({CubicPath::rectangle({0, 0, 4, 3}), {1.0, 0.5, 0.0, 0.25}, 0});
  doc.rounds[1].precision = 30;
  doc.rounds[1].region = PixelRect{1, 1, 2, 2};
  const std::string text = serialize_svg(doc);
  CHECK(text.find("<g data-round-index=\"1\" data-round-ncolors=\"30\" data-round-region=\"1 1 2 2\">") !=
        std::string::npos);
  CHECK(text.find("fill=\"#ff8000\" fill-opacity=\"0.250000\"") != std::string::npos);
  CHECK(text.find("d=\"M 0.000000 0.000000 C ") != std::string::npos);
  CHECK(text.find(" Z\"") != std::string::npos);
  const auto back = parse_svg(text);
  CHECK(back.rounds.size() == 2);
  CHECK(back.rounds[1].elements.empty());
  CHECK(back.rounds[1].region == doc.rounds[1].region);
  CHECK(serialize_svg(back) == text);
}

TEST_CASE("svg round trip over random documents") {
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto doc = testing::random_svg_document(s);
    const auto text = serialize_svg(doc);
    const auto back = parse_svg(text);
    REQUIRE(back.width == doc.width);
    REQUIRE(back.rounds.size() == doc.rounds.size());
    for (std::size_t r = 0; r < doc.rounds.size(); ++r) {
      const auto& a = doc.rounds[r];
      const auto& b = back.rounds[r];
      CHECK(a.precision == b.precision);
      CHECK(a.region == b.region);
      REQUIRE(a.elements.size() == b.elements.size());
      for (std::size_t e = 0; e < a.elements.size(); ++e) {
        CHECK(a.elements[e].id == b.elements[e].id);
        REQUIRE(a.elements[e].path.size() == b.elements[e].path.size());
        for (std::size_t k = 0; k < a.elements[e].path.size(); ++k) {
          CHECK(std::abs(a.elements[e].path[k].x - b.elements[e].path[k].x) <= 1e-6);
          CHECK(std::abs(a.elements[e].path[k].y - b.elements[e].path[k].y) <= 1e-6);
        }
        CHECK(std::abs(a.elements[e].fill.r - b.elements[e].fill.r) <= 1.0 / 255);
        CHECK(std::abs(a.elements[e].fill.a - b.elements[e].fill.a) <= 1e-6);
      }
    }
    CHECK(serialize_svg(back) == text);
  }
}

TEST_CASE("svg parser rejects constructs outside the subset") {
  const std::string head = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"4\" height=\"4\">"
                           "<g data-round-index=\"0\" data-round-ncolors=\"2\">";
  const std::string tail = "</g></svg>";
  auto with_d = [&](const std::string& d) {
    return head + "<path id=\"e0\" d=\"" + d + "\" fill=\"#000000\"/>" + tail;
  };
  CHECK_NOTHROW(parse_svg(with_d("M 0 0 C 1 0 2 0 2 2 C 1 2,0 2 0 0 Z")));
  CHECK_NOTHROW(parse_svg(with_d("M0,0C1,0 2,0 2,2 1,2 0,2 0,0Z")));
  CHECK_THROWS_WITH_AS(parse_svg(with_d("M 0 0 Q 1 1 2 2 Z")), doctest::Contains("'Q'"), Error);
  CHECK_THROWS_WITH_AS(parse_svg(with_d("M 0 0 A 1 1 0 0 0 2 2 Z")), doctest::Contains("'A'"), Error);
  CHECK_THROWS_WITH_AS(parse_svg(with_d("M 0 0 c 1 0 2 0 0 0 Z")), doctest::Contains("relative"), Error);
  CHECK_THROWS_WITH_AS(parse_svg(with_d("M 0 0 C 1 0 2 0 0 0")), doctest::Contains("not closed"), Error);
  CHECK_THROWS_WITH_AS(parse_svg(with_d("M 0 0 C 1 0 2 0 3 3 Z")), doctest::Contains("M point"), Error);
  CHECK_THROWS_WITH_AS(parse_svg(with_d("M 0 0 Q 1 1 2 2 Z")), doctest::Contains("offset 1"), Error);

  CHECK_THROWS_WITH_AS(parse_svg(head + "<rect/>" + tail), doctest::Contains("<rect>"), Error);
  CHECK_THROWS_WITH_AS(parse_svg(head + "<path id=\"e0\" d=\"M 0 0 C 1 0 2 0 0 0 Z\" fill=\"#000000\" stroke=\"red\"/>" +
                                 tail),
                       doctest::Contains("stroke"), Error);
  CHECK_THROWS_AS(parse_svg(head + "<path id=\"e0\" d=\"M 0 0 C 1 0 2 0 0 0 Z\" fill=\"red\"/>" + tail), Error);
  CHECK_THROWS_AS(parse_svg(head + "<path id=\"e0\" d=\"M 0 0 C 1 0 2 0 0 0 Z\" fill=\"#000000\"/>"
                                   "<path id=\"e0\" d=\"M 0 0 C 1 0 2 0 0 0 Z\" fill=\"#000000\"/>" + tail),
                  Error);
  CHECK_THROWS_AS(parse_svg("<svg width=\"4\" height=\"4\"><g data-round-index=\"1\" data-round-ncolors=\"2\"/></svg>"),
                  Error);
  CHECK_THROWS_AS(parse_svg("<svg width=\"4\"></svg>"), Error);
  CHECK_THROWS_AS(parse_svg("<svg width=\"4\" height=\"4\"></svg> trailing"), Error);
  CHECK_THROWS_AS(read_svg("/nonexistent.svg"), Error);
  CHECK(parse_svg("<?xml version=\"1.0\"?>\n<svg width=\"4\" height=\"4\" viewBox=\"0 0 4 4\"/>").rounds.empty());
}

TEST_CASE("minimal config takes every default") {
  const auto cfg = parse_config(R"({"input": "img.png",
    "guidance": {"rois": [{"rect": [0, 0, 500, 300], "prompt": "a cat"}]}})");
  CHECK(cfg.input == "img.png");
  REQUIRE(cfg.vectorize.rounds.size() == 2);
  CHECK(cfg.vectorize.rounds[0].n_colors == 10);
  CHECK(cfg.vectorize.rounds[1].n_colors == 30);
  CHECK_FALSE(cfg.vectorize.rounds[0].region.has_value());
  const auto& g = cfg.optimizer.guidance;
  REQUIRE(g.rois.size() == 1);
  CHECK(g.rois[0].roi_weight == 30.0);
  CHECK(g.rois[0].patch_count == 64);
  CHECK(g.rois[0].patch_weight_total == 80.0);
  CHECK(g.rois[0].patch_fraction == 0.8);
  CHECK(g.reference_text == "photo");
  CHECK(g.content_weight == 0.0);
  CHECK(cfg.optimizer.iterations == 150);
  CHECK(cfg.optimizer.lr_shape == 0.2);
  CHECK(cfg.optimizer.lr_color == 0.01);
  CHECK(cfg.optimizer.mode == OptimizeMode::both);
  CHECK(cfg.backend.kind == "mock");

  CHECK(parse_config(R"({"optimizer": {}})").optimizer.iterations == 150);
}

TEST_CASE("config parsing is strict") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"optimiser": {}})"), doctest::Contains("optimiser"), Error);
  CHECK_THROWS_WITH_AS(parse_config(R"({"optimizer": {"iters": 3}})"), doctest::Contains("iters"), Error);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"guidance": {"rois": [{"rect": [0,0,4,4], "prompt": "x", "patch_fraction": 1.5}]}})"),
      doctest::Contains("patch_fraction"), Error);
  CHECK_THROWS_AS(parse_config(R"({"guidance": {"rois": [{"rect": [0,0,4], "prompt": "x"}]}})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"optimizer": {"mode": "sideways"}})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"optimizer": {"iterations": -1}})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"optimizer": {"iterations": 1.5}})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"vectorize": {"rounds": []}})"), Error);
  CHECK_THROWS_AS(parse_config("{not json"), Error);
  CHECK_THROWS_AS(parse_config("[]"), Error);
}

TEST_CASE("config dump parses back to the same values") {
  auto cfg = parse_config(R"({"input": "a.png", "output": "b.svg",
    "vectorize": {"rounds": [{"n_colors": 4}, {"n_colors": 12, "region": [1, 2, 30, 40]}], "seed": 5},
    "guidance": {"rois": [{"rect": [0, 0, 8, 8], "prompt": "dog", "patch_count": 8}], "content_weight": 2.5},
    "optimizer": {"iterations": 20, "mode": "color_only", "subregion": [1, 1, 5, 5], "seed": 9},
    "backend": {"seed": 3, "dim": 4, "text_overrides": {"dog": [1, 0, 0, 0]}, "text_from_image": {"cat": "c.png"}}})");
  const auto again = parse_config(dump_config(cfg));
  CHECK(dump_config(again) == dump_config(cfg));
  CHECK(again.vectorize.rounds[1].region == PixelRect{1, 2, 30, 40});
  CHECK(again.optimizer.mode == OptimizeMode::color_only);
  CHECK(again.subregion == Rect{1, 1, 5, 5});
  CHECK(again.backend == cfg.backend);
}

TEST_CASE("load_config resolves paths next to the file") {
  const auto path = temp_path("run.json");
  std::ofstream(path) << R"({"input": "pic.png", "backend": {"text_from_image": {"x": "x.png"}}})";
  const auto cfg = load_config(path.string());
  CHECK(cfg.input == (path.parent_path() / "pic.png").string());
  CHECK(cfg.backend.text_from_image.at("x") == (path.parent_path() / "x.png").string());
  CHECK_THROWS_WITH_AS(load_config("/nonexistent/run.json"), doctest::Contains("/nonexistent/run.json"), Error);
}
