// Command-line front end: vectorize, edit, render and score.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vexel/embedder.hpp"
#include "vexel/guidance.hpp"
#include "vexel/io/config.hpp"
#include "vexel/io/png.hpp"
#include "vexel/io/svg.hpp"
#include "vexel/optimizer.hpp"
#include "vexel/rasterizer.hpp"
#include "vexel/vectorizer.hpp"

namespace fs = std::filesystem;
using namespace vexel;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitBackend = 3;

struct Options {
  std::string input, config, output, svg, frames, render_path, prompt, backend_kind;
  std::optional<std::uint64_t> seed;
  int width = 0, height = 0;
  int threads = 0;
};

RunConfig load_or_default(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.input.empty()) cfg.input = o.input;
  if (!o.output.empty()) cfg.output = o.output;
  return cfg;
}

void require_path(const std::string& value, const char* what) {
  if (value.empty()) throw Error(std::string("no ") + what + " given (use the flag or the config file)");
}

int run_vectorize(const Options& o) {
  RunConfig cfg = load_or_default(o);
  require_path(cfg.input, "input image");
  require_path(cfg.output, "output path");
  if (o.seed) cfg.vectorize.seed = *o.seed;
  const Raster image = read_png(cfg.input);
  const VectorDocument doc = vectorize(image, cfg.vectorize);
  write_svg(cfg.output, doc);
  for (std::size_t r = 0; r < doc.rounds.size(); ++r) {
    std::printf("round %zu: %zu elements (%d colors)\n", r + 1, doc.rounds[r].elements.size(),
                doc.rounds[r].precision);
  }
  std::printf("psnr: %.2f dB\n", psnr(render(doc), image));
  return 0;
}

int run_edit(const Options& o) {
  RunConfig cfg = load_or_default(o);
  require_path(cfg.input, "input image");
  require_path(cfg.output, "output path");
  if (o.seed) {
    cfg.vectorize.seed = *o.seed;
    cfg.optimizer.seed = *o.seed;
  }
  if (cfg.optimizer.guidance.rois.empty()) throw Error("edit needs at least one ROI prompt in guidance.rois");
  const auto backend = make_backend(cfg.backend);

  const Raster image = read_png(cfg.input);
  VectorDocument doc = o.svg.empty() ? vectorize(image, cfg.vectorize) : read_svg(o.svg);
  if (doc.width != image.width || doc.height != image.height) {
    throw Error("document " + o.svg + " is " + std::to_string(doc.width) + "x" + std::to_string(doc.height) +
                " but the image is " + std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  OptimizeConfig opt = cfg.optimizer;
  if (cfg.subregion) opt.mask = select_intersecting(doc, *cfg.subregion);

  if (!o.frames.empty()) {
    fs::create_directories(o.frames);
    write_png((fs::path(o.frames) / "frame_0000.png").string(), render(doc, opt.render));
  }
  auto progress = [&](int it, double, const Raster* snapshot) {
    if (snapshot && !o.frames.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%04d.png", it);
      write_png((fs::path(o.frames) / name).string(), *snapshot);
    }
  };
  const RunReport report = optimize(doc, image, opt, *backend, progress);
  write_svg(cfg.output, report.final_document);

  const Raster final_image = render(report.final_document, opt.render);
  if (!o.render_path.empty()) write_png(o.render_path, final_image);

  const auto losses = report.losses();
  std::printf("iterations: %zu\n", losses.size());
  if (!losses.empty()) {
    std::printf("loss: first %.6f, last %.6f, min %.6f\n", losses.front(), losses.back(),
                *std::min_element(losses.begin(), losses.end()));
  }
  for (std::size_t i = 0; i < opt.guidance.rois.size(); ++i) {
    const auto& roi = opt.guidance.rois[i];
    std::printf("roi %zu \"%s\": clip score %.6f\n", i + 1, roi.prompt.c_str(),
                clip_score(*backend, crop(final_image, roi.area), roi.prompt));
  }
  return 0;
}

int run_render(const Options& o) {
  if (o.width <= 0 || o.height <= 0) throw Error("--width and --height must be positive");
  const VectorDocument doc = read_svg(o.input);
  write_png(o.output, render(scale_document(doc, o.width, o.height)));
  return 0;
}

int run_score(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.backend_kind.empty()) cfg.backend.kind = o.backend_kind;
  if (o.seed) cfg.backend.seed = *o.seed;
  const auto backend = make_backend(cfg.backend);
  const Raster image = read_png(o.input);
  std::printf("%.6f\n", clip_score(*backend, image, o.prompt));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vexel: vectorize images and edit them with text-guided optimization"};
  app.require_subcommand(1, 1);
  Options o;
  if (const char* env = std::getenv("VEXEL_THREADS")) o.threads = std::atoi(env);
  app.add_option("--threads", o.threads, "Worker threads (default: VEXEL_THREADS or all cores)");

  auto* vec = app.add_subcommand("vectorize", "Convert a PNG into a layered SVG document");
  vec->add_option("--input", o.input, "Input PNG");
  vec->add_option("--config", o.config, "Run configuration (JSON)");
  vec->add_option("--output", o.output, "Output SVG");
  vec->add_option("--seed", o.seed, "Override the vectorization seed");

  auto* edit = app.add_subcommand("edit", "Vectorize (or load) and optimize toward the configured prompts");
  edit->add_option("--input", o.input, "Input PNG");
  edit->add_option("--config", o.config, "Run configuration (JSON)")->required();
  edit->add_option("--output", o.output, "Output SVG");
  edit->add_option("--svg", o.svg, "Start from this SVG instead of vectorizing");
  edit->add_option("--frames", o.frames, "Directory for snapshot PNGs");
  edit->add_option("--render", o.render_path, "Also write the final render as PNG");
  edit->add_option("--seed", o.seed, "Override vectorization and optimizer seeds");

  auto* ren = app.add_subcommand("render", "Rasterize an SVG document at any size");
  ren->add_option("--input", o.input, "Input SVG")->required();
  ren->add_option("--width", o.width, "Output width")->required();
  ren->add_option("--height", o.height, "Output height")->required();
  ren->add_option("--output", o.output, "Output PNG")->required();

  auto* score = app.add_subcommand("score", "Print the image-text cosine similarity");
  score->add_option("--input", o.input, "Input PNG")->required();
  score->add_option("--prompt", o.prompt, "Text prompt")->required();
  score->add_option("--config", o.config, "Run configuration supplying the backend section");
  score->add_option("--backend", o.backend_kind, "Backend kind (mock or external)");
  score->add_option("--seed", o.seed, "Backend seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (o.threads > 0) set_thread_count(o.threads);
    if (*vec) return run_vectorize(o);
    if (*edit) return run_edit(o);
    if (*ren) return run_render(o);
    return run_score(o);
  } catch (const BackendError& e) {
    std::fprintf(stderr, "vexel: backend error: %s\n", e.what());
    return kExitBackend;
  } catch (const vexel::Error& e) {
    std::fprintf(stderr, "vexel: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vexel: %s\n", e.what());
    return 1;
  }
}
