#include "vexel/io/config.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace vexel {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error("config " + where + ": " + what);
}

const json& as_object(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(where, "unknown key \"" + key + "\"");
  }
  return j;
}

std::string sub(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
      if (!it->is_number_integer()) fail(sub(where, key), "must be an integer");
      if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (it->is_number_unsigned()) {
          out = it->template get<std::uint64_t>();
        } else if (it->template get<std::int64_t>() < 0) {
          fail(sub(where, key), "must be non-negative");
        } else {
          out = std::uint64_t(it->template get<std::int64_t>());
        }
      } else {
        out = it->template get<T>();
      }
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) fail(sub(where, key), "must be a number");
      out = it->template get<double>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) fail(sub(where, key), "must be true or false");
      out = it->template get<bool>();
    } else {
      if (!it->is_string()) fail(sub(where, key), "must be a string");
      out = it->template get<std::string>();
    }
  } catch (const json::exception& e) {
    fail(sub(where, key), e.what());
  }
}

std::array<double, 4> read_quad(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) fail(where, "must be [x, y, width, height]");
  std::array<double, 4> v{};
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_number()) fail(where, "must be [x, y, width, height]");
    v[i] = j[i].get<double>();
  }
  return v;
}

PixelRect read_pixel_rect(const json& j, const std::string& where) {
  const auto v = read_quad(j, where);
  for (double x : v)
    if (x != std::floor(x)) fail(where, "must contain integers");
  if (v[2] <= 0 || v[3] <= 0) fail(where, "width and height must be positive");
  return {int(v[0]), int(v[1]), int(v[2]), int(v[3])};
}

void read_vectorize(const json& j, VectorizeConfig& cfg) {
  as_object(j, "vectorize", {"rounds", "seed"});
  read(j, "seed", cfg.seed, "vectorize");
  if (auto it = j.find("rounds"); it != j.end()) {
    if (!it->is_array() || it->empty()) fail("vectorize.rounds", "must be a non-empty array");
    cfg.rounds.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = "vectorize.rounds[" + std::to_string(i) + "]";
      const json& r = as_object((*it)[i], where, {"n_colors", "region", "simplify_tolerance", "fit_tolerance", "min_area"});
      RoundSpec spec;
      read(r, "n_colors", spec.n_colors, where);
      read(r, "simplify_tolerance", spec.simplify_tolerance, where);
      read(r, "fit_tolerance", spec.fit_tolerance, where);
      read(r, "min_area", spec.min_area, where);
      if (auto reg = r.find("region"); reg != r.end()) spec.region = read_pixel_rect(*reg, where + ".region");
      if (spec.n_colors < 1) fail(where + ".n_colors", "must be at least 1");
      if (!(spec.simplify_tolerance > 0) || !(spec.fit_tolerance > 0)) fail(where, "tolerances must be positive");
      if (spec.min_area < 0) fail(where + ".min_area", "must be non-negative");
      cfg.rounds.push_back(spec);
    }
  }
}

void read_guidance(const json& j, GuidanceConfig& cfg) {
  as_object(j, "guidance", {"rois", "reference_text", "content_weight", "warp_source_patches"});
  read(j, "reference_text", cfg.reference_text, "guidance");
  read(j, "content_weight", cfg.content_weight, "guidance");
  read(j, "warp_source_patches", cfg.warp_source_patches, "guidance");
  if (cfg.content_weight < 0) fail("guidance.content_weight", "must be non-negative");
  if (auto it = j.find("rois"); it != j.end()) {
    if (!it->is_array()) fail("guidance.rois", "must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = "guidance.rois[" + std::to_string(i) + "]";
      const json& r = as_object((*it)[i], where,
                                {"rect", "prompt", "roi_weight", "patch_count", "patch_weight_total",
                                 "patch_fraction", "perspective_strength"});
      RoiPrompt roi;
      if (!r.contains("rect")) fail(where, "missing \"rect\"");
      if (!r.contains("prompt")) fail(where, "missing \"prompt\"");
      roi.area = read_pixel_rect(r["rect"], where + ".rect");
      read(r, "prompt", roi.prompt, where);
      read(r, "roi_weight", roi.roi_weight, where);
      read(r, "patch_count", roi.patch_count, where);
      read(r, "patch_weight_total", roi.patch_weight_total, where);
      read(r, "patch_fraction", roi.patch_fraction, where);
      read(r, "perspective_strength", roi.perspective_strength, where);
      if (roi.prompt.empty()) fail(where + ".prompt", "must not be empty");
      if (roi.roi_weight < 0 || roi.patch_weight_total < 0) fail(where, "weights must be non-negative");
      if (roi.patch_count < 0) fail(where + ".patch_count", "must be non-negative");
      if (!(roi.patch_fraction > 0 && roi.patch_fraction <= 1)) fail(where + ".patch_fraction", "must be in (0, 1]");
      if (!(roi.perspective_strength >= 0 && roi.perspective_strength < 1)) {
        fail(where + ".perspective_strength", "must be in [0, 1)");
      }
      cfg.rois.push_back(roi);
    }
  }
}

OptimizeMode parse_mode(const std::string& s) {
  if (s == "both") return OptimizeMode::both;
  if (s == "shape_only") return OptimizeMode::shape_only;
  if (s == "color_only") return OptimizeMode::color_only;
  fail("optimizer.mode", "must be \"both\", \"shape_only\" or \"color_only\", not \"" + s + "\"");
}

const char* mode_name(OptimizeMode m) {
  switch (m) {
    case OptimizeMode::shape_only: return "shape_only";
    case OptimizeMode::color_only: return "color_only";
    default: return "both";
  }
}

void read_optimizer(const json& j, RunConfig& cfg) {
  as_object(j, "optimizer",
            {"iterations", "lr_shape", "lr_color", "mode", "subregion", "seed", "snapshot_every", "bandwidth",
             "segments_per_cubic"});
  OptimizeConfig& o = cfg.optimizer;
  read(j, "iterations", o.iterations, "optimizer");
  read(j, "lr_shape", o.lr_shape, "optimizer");
  read(j, "lr_color", o.lr_color, "optimizer");
  read(j, "seed", o.seed, "optimizer");
  read(j, "snapshot_every", o.snapshot_every, "optimizer");
  read(j, "bandwidth", o.render.bandwidth, "optimizer");
  read(j, "segments_per_cubic", o.render.segments_per_cubic, "optimizer");
  std::string mode = mode_name(o.mode);
  read(j, "mode", mode, "optimizer");
  o.mode = parse_mode(mode);
  if (auto it = j.find("subregion"); it != j.end()) {
    const auto v = read_quad(*it, "optimizer.subregion");
    if (v[2] <= 0 || v[3] <= 0) fail("optimizer.subregion", "width and height must be positive");
    cfg.subregion = Rect{v[0], v[1], v[2], v[3]};
  }
  try {
    validate(o);
  } catch (const Error& e) {
    fail("optimizer", e.what());
  }
}

void read_backend(const json& j, BackendConfig& b) {
  as_object(j, "backend",
            {"kind", "seed", "dim", "input_size", "text_model", "image_model", "text_overrides", "text_from_image"});
  read(j, "kind", b.kind, "backend");
  read(j, "seed", b.seed, "backend");
  read(j, "dim", b.dim, "backend");
  read(j, "input_size", b.input_size, "backend");
  read(j, "text_model", b.text_model, "backend");
  read(j, "image_model", b.image_model, "backend");
  if (b.dim <= 0 || b.input_size <= 0) fail("backend", "dim and input_size must be positive");
  if (auto it = j.find("text_overrides"); it != j.end()) {
    if (!it->is_object()) fail("backend.text_overrides", "must map prompts to number arrays");
    for (const auto& [text, vec] : it->items()) {
      if (!vec.is_array()) fail("backend.text_overrides", "\"" + text + "\" must be a number array");
      Embedding e;
      for (const auto& x : vec) {
        if (!x.is_number()) fail("backend.text_overrides", "\"" + text + "\" must be a number array");
        e.push_back(x.get<double>());
      }
      b.text_overrides[text] = std::move(e);
    }
  }
  if (auto it = j.find("text_from_image"); it != j.end()) {
    if (!it->is_object()) fail("backend.text_from_image", "must map prompts to PNG paths");
    for (const auto& [text, p] : it->items()) {
      if (!p.is_string()) fail("backend.text_from_image", "\"" + text + "\" must be a path string");
      b.text_from_image[text] = p.get<std::string>();
    }
  }
}

json rect_json(const PixelRect& r) { return json::array({r.x, r.y, r.width, r.height}); }

}  // namespace

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(std::string("config is not valid JSON: ") + e.what());
  }
  as_object(root, "root", {"input", "output", "vectorize", "guidance", "optimizer", "backend"});
  RunConfig cfg;
  read(root, "input", cfg.input, "");
  read(root, "output", cfg.output, "");
  if (auto it = root.find("vectorize"); it != root.end()) read_vectorize(*it, cfg.vectorize);
  if (auto it = root.find("guidance"); it != root.end()) read_guidance(*it, cfg.optimizer.guidance);
  if (auto it = root.find("optimizer"); it != root.end()) read_optimizer(*it, cfg);
  if (auto it = root.find("backend"); it != root.end()) read_backend(*it, cfg.backend);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig cfg;
  try {
    cfg = parse_config(buf.str());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (dir / p).lexically_normal().string();
  };
  resolve(cfg.input);
  resolve(cfg.output);
  resolve(cfg.backend.text_model);
  resolve(cfg.backend.image_model);
  for (auto& [_, p] : cfg.backend.text_from_image) resolve(p);
  return cfg;
}

std::string dump_config(const RunConfig& cfg) {
  json root;
  root["input"] = cfg.input;
  root["output"] = cfg.output;
  json rounds = json::array();
  for (const auto& r : cfg.vectorize.rounds) {
    json jr = {{"n_colors", r.n_colors},
               {"simplify_tolerance", r.simplify_tolerance},
               {"fit_tolerance", r.fit_tolerance},
               {"min_area", r.min_area}};
    if (r.region) jr["region"] = rect_json(*r.region);
    rounds.push_back(jr);
  }
  root["vectorize"] = {{"rounds", rounds}, {"seed", cfg.vectorize.seed}};
  const auto& g = cfg.optimizer.guidance;
  json rois = json::array();
  for (const auto& r : g.rois) {
    rois.push_back({{"rect", rect_json(r.area)},
                    {"prompt", r.prompt},
                    {"roi_weight", r.roi_weight},
                    {"patch_count", r.patch_count},
                    {"patch_weight_total", r.patch_weight_total},
                    {"patch_fraction", r.patch_fraction},
                    {"perspective_strength", r.perspective_strength}});
  }
  root["guidance"] = {{"rois", rois},
                      {"reference_text", g.reference_text},
                      {"content_weight", g.content_weight},
                      {"warp_source_patches", g.warp_source_patches}};
  const auto& o = cfg.optimizer;
  json jo = {{"iterations", o.iterations},
             {"lr_shape", o.lr_shape},
             {"lr_color", o.lr_color},
             {"mode", mode_name(o.mode)},
             {"seed", o.seed},
             {"snapshot_every", o.snapshot_every},
             {"bandwidth", o.render.bandwidth},
             {"segments_per_cubic", o.render.segments_per_cubic}};
  if (cfg.subregion) {
    const auto& s = *cfg.subregion;
    jo["subregion"] = json::array({s.x, s.y, s.width, s.height});
  }
  root["optimizer"] = jo;
  const auto& b = cfg.backend;
  json overrides = json::object();
  for (const auto& [k, v] : b.text_overrides) overrides[k] = v;
  json from_image = json::object();
  for (const auto& [k, v] : b.text_from_image) from_image[k] = v;
  root["backend"] = {{"kind", b.kind},
                     {"seed", b.seed},
                     {"dim", b.dim},
                     {"input_size", b.input_size},
                     {"text_model", b.text_model},
                     {"image_model", b.image_model},
                     {"text_overrides", overrides},
                     {"text_from_image", from_image}};
  return root.dump(2) + "\n";
}

}  // namespace vexel
