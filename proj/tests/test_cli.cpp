#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "vexel/embedder.hpp"
#include "vexel/image_ops.hpp"
#include "vexel/io/png.hpp"
#include "vexel/io/svg.hpp"

using namespace vexel;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(VEXEL_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), int(buf.size()), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path workdir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "vexel_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const fs::path fixtures = VEXEL_FIXTURES;

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Writes the toy edit config with overrides applied to the optimizer table.
fs::path toy_config(const fs::path& dir, const nlohmann::json& optimizer) {
  auto cfg = nlohmann::json::parse(slurp(fixtures / "toy_edit.json"));
  cfg["input"] = (fixtures / "toy.png").string();
  cfg["backend"]["text_from_image"]["a hue-shifted toy"] = (fixtures / "toy_hue.png").string();
  cfg["backend"]["text_from_image"]["photo"] = (fixtures / "toy.png").string();
  for (const auto& [k, v] : optimizer.items()) cfg["optimizer"][k] = v;
  const auto path = dir / "run.json";
  std::ofstream(path) << cfg.dump(2);
  return path;
}

std::vector<std::string> path_data(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex d(" d=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), d); it != std::sregex_iterator(); ++it)
    out.push_back((*it)[1]);
  return out;
}

}  // namespace

TEST_CASE("vectorize writes a two-round document reproducibly") {
  const auto dir = workdir("vectorize");
  const auto a = run("vectorize --input " + q(fixtures / "toy.png") + " --output " + q(dir / "a.svg") + " --seed 3");
  REQUIRE(a.code == 0);
  CHECK(a.out.find("round 1:") != std::string::npos);
  CHECK(a.out.find("psnr:") != std::string::npos);
  const auto doc = read_svg((dir / "a.svg").string());
  CHECK(doc.rounds.size() == 2);
  const auto bg = doc.rounds[0].elements[0].path.bounds();
  CHECK(bg.x == 0.0);
  CHECK(bg.y == 0.0);
  CHECK(bg.width == doctest::Approx(64.0));
  CHECK(bg.height == doctest::Approx(64.0));

  REQUIRE(run("vectorize --input " + q(fixtures / "toy.png") + " --output " + q(dir / "b.svg") + " --seed 3").code == 0);
  CHECK(slurp(dir / "a.svg") == slurp(dir / "b.svg"));

  const auto missing = run("vectorize --input " + q(dir / "nope.png") + " --output " + q(dir / "c.svg"));
  CHECK(missing.code == 2);
  CHECK(missing.out.find("nope.png") != std::string::npos);
  CHECK(run("vectorize --bogus").code == 2);
  CHECK(run("").code == 2);
}

TEST_CASE("edit runs the default schedule and is byte reproducible") {
  const auto dir = workdir("edit");
  const auto cfg = toy_config(dir, nlohmann::json::object());
  const auto a = run("edit --config " + q(cfg) + " --output " + q(dir / "a.svg") + " --frames " + q(dir / "frames") +
                     " --render " + q(dir / "a.png"));
  REQUIRE(a.code == 0);
  CHECK(a.out.find("iterations: 150") != std::string::npos);
  CHECK(a.out.find("clip score") != std::string::npos);
  CHECK(fs::exists(dir / "frames" / "frame_0000.png"));
  CHECK(fs::exists(dir / "frames" / "frame_0150.png"));
  CHECK(std::distance(fs::directory_iterator(dir / "frames"), fs::directory_iterator{}) == 16);
  CHECK(read_png((dir / "a.png").string()).width == 64);

  const auto b = run("--threads 3 edit --config " + q(cfg) + " --output " + q(dir / "b.svg"));
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "a.svg") == slurp(dir / "b.svg"));
  CHECK(a.out == b.out);
}

TEST_CASE("color_only edits keep path data byte-identical") {
  const auto dir = workdir("color_only");
  const auto cfg = toy_config(dir, {{"mode", "color_only"}, {"iterations", 20}});
  REQUIRE(run("vectorize --config " + q(cfg) + " --output " + q(dir / "v.svg")).code == 0);
  REQUIRE(run("edit --config " + q(cfg) + " --output " + q(dir / "e.svg")).code == 0);
  const auto before = slurp(dir / "v.svg"), after = slurp(dir / "e.svg");
  CHECK(before != after);
  CHECK(path_data(before) == path_data(after));

  // Resuming from the SVG gives the same result as vectorizing again.
  REQUIRE(run("edit --config " + q(cfg) + " --svg " + q(dir / "v.svg") + " --output " + q(dir / "r.svg")).code == 0);
  CHECK(path_data(slurp(dir / "r.svg")) == path_data(before));
}

TEST_CASE("subregion edits leave other elements alone") {
  const auto dir = workdir("subregion");
  const auto cfg = toy_config(dir, {{"subregion", {0, 44, 10, 10}}, {"iterations", 10}});
  REQUIRE(run("vectorize --config " + q(cfg) + " --output " + q(dir / "v.svg")).code == 0);
  REQUIRE(run("edit --config " + q(cfg) + " --output " + q(dir / "e.svg")).code == 0);
  const auto v = read_svg((dir / "v.svg").string()), e = read_svg((dir / "e.svg").string());
  int changed = 0, kept = 0;
  for (std::size_t r = 0; r < v.rounds.size(); ++r)
    for (std::size_t i = 0; i < v.rounds[r].elements.size(); ++i) {
      const auto& a = v.rounds[r].elements[i];
      const auto& b = e.rounds[r].elements[i];
      const auto box = a.path.bounds();
      const bool hit = box.x <= 10 && box.right() >= 0 && box.y <= 54 && box.bottom() >= 44;
      if (hit) {
        changed += !(a == b);
      } else {
        kept += 1;
        CHECK(a == b);
      }
    }
  CHECK(changed > 0);
  CHECK(kept > 0);
}

TEST_CASE("render is resolution independent") {
  const auto dir = workdir("render");
  REQUIRE(run("vectorize --input " + q(fixtures / "toy.png") + " --output " + q(dir / "d.svg")).code == 0);
  REQUIRE(run("render --input " + q(dir / "d.svg") + " --width 64 --height 64 --output " + q(dir / "x1.png")).code == 0);
  REQUIRE(run("render --input " + q(dir / "d.svg") + " --width 128 --height 128 --output " + q(dir / "x2.png")).code ==
          0);
  const auto one = read_png((dir / "x1.png").string());
  const auto two = read_png((dir / "x2.png").string());
  REQUIRE(two.width == 128);
  double sum = 0.0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c) {
        const double down = 0.25 * (two.at(2 * x, 2 * y, c) + two.at(2 * x + 1, 2 * y, c) + two.at(2 * x, 2 * y + 1, c) +
                                    two.at(2 * x + 1, 2 * y + 1, c));
        sum += std::abs(down - one.at(x, y, c));
      }
  CHECK(sum / (64 * 64 * 3) <= 2.0 / 255);

  REQUIRE(run("render --input " + q(dir / "d.svg") + " --width 1 --height 1 --output " + q(dir / "p.png")).code == 0);
  CHECK(read_png((dir / "p.png").string()).width == 1);

  std::ofstream(dir / "bad.svg") << "<svg width=\"4\" height=\"4\"><rect/></svg>";
  const auto bad = run("render --input " + q(dir / "bad.svg") + " --width 4 --height 4 --output " + q(dir / "b.png"));
  CHECK(bad.code == 2);
  CHECK(bad.out.find("offset") != std::string::npos);
}

TEST_CASE("score prints rigged cosines and reports backend failures") {
  const auto dir = workdir("score");
  const auto image = read_png((fixtures / "toy.png").string());
  const LinearMockEmbedder mock(7, 64, 32);
  const auto e = mock.embed_image(image);
  Embedding neg(e.size()), ortho(e.size(), 0.0);
  for (std::size_t i = 0; i < e.size(); ++i) neg[i] = -e[i];
  ortho[0] = e[1];
  ortho[1] = -e[0];
  nlohmann::json cfg = {{"backend",
                         {{"seed", 7},
                          {"text_overrides", {{"same", e}, {"opposite", neg}, {"orthogonal", ortho}}}}}};
  std::ofstream(dir / "score.json") << cfg.dump();
  auto score = [&](const std::string& prompt) {
    return run("score --input " + q(fixtures / "toy.png") + " --config " + q(dir / "score.json") + " --prompt " +
               prompt);
  };
  CHECK(score("same").out == "1.000000\n");
  CHECK(score("opposite").out == "-1.000000\n");
  CHECK(score("orthogonal").out == "0.000000\n");
  const auto any = score("'a cat'");
  CHECK(any.code == 0);
  CHECK(std::abs(std::stod(any.out)) <= 1.0);

  const auto ext = run("score --input " + q(fixtures / "toy.png") + " --prompt x --backend external");
  CHECK(ext.code == 3);
  const auto cfg_path = toy_config(dir, nlohmann::json::object());
  auto j = nlohmann::json::parse(slurp(cfg_path));
  j["backend"] = {{"kind", "external"}, {"text_model", "missing.pt"}, {"image_model", "missing.pt"}};
  std::ofstream(dir / "ext.json") << j.dump();
  const auto edit = run("edit --config " + q(dir / "ext.json") + " --output " + q(dir / "o.svg"));
  CHECK(edit.code == 3);
  CHECK_FALSE(fs::exists(dir / "o.svg"));
}
