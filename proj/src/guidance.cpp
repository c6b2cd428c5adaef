#include "vexel/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vexel {

namespace {

constexpr double kNormFloor = 1e-6;

double norm(const Embedding& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void add_scaled(Raster& target, const Raster& source, double scale) {
  for (std::size_t i = 0; i < target.pixels.size(); ++i) target.pixels[i] += scale * source.pixels[i];
}

PixelRect shifted(const PixelRect& r, int dx, int dy) { return {r.x + dx, r.y + dy, r.width, r.height}; }

Quad shifted(const Quad& q, double dx, double dy) {
  Quad out = q;
  for (auto& p : out) p = {p.x + dx, p.y + dy};
  return out;
}

}  // namespace

void validate(const GuidanceConfig& config, int width, int height) {
  if (config.rois.empty()) throw Error("guidance needs at least one ROI prompt");
  if (config.content_weight < 0.0) throw Error("content_weight must be non-negative");
  for (std::size_t i = 0; i < config.rois.size(); ++i) {
    const auto& r = config.rois[i];
    const std::string where = "roi " + std::to_string(i + 1);
    const auto& a = r.area;
    if (a.width <= 0 || a.height <= 0 || a.x < 0 || a.y < 0 || a.right() > width || a.bottom() > height) {
      throw Error(where + ": area must have positive size inside the " + std::to_string(width) + "x" +
                  std::to_string(height) + " canvas");
    }
    if (r.patch_count < 0) throw Error(where + ": patch_count must be non-negative");
    if (r.roi_weight < 0.0 || r.patch_weight_total < 0.0) throw Error(where + ": weights must be non-negative");
    if (!(r.patch_fraction > 0.0 && r.patch_fraction <= 1.0)) throw Error(where + ": patch_fraction must be in (0, 1]");
    if (!(r.perspective_strength >= 0.0 && r.perspective_strength < 1.0)) {
      throw Error(where + ": perspective_strength must be in [0, 1)");
    }
  }
}

Embedding text_direction(const EmbedderBackend& backend, const std::string& prompt, const std::string& reference) {
  const Embedding p = backend.embed_text(prompt);
  const Embedding r = backend.embed_text(reference);
  if (p.size() != r.size()) throw Error("text embeddings have different lengths");
  Embedding d(p.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = p[i] - r[i];
  if (norm(d) < kNormFloor) throw Error("degenerate text direction: \"" + prompt + "\" matches \"" + reference + "\"");
  return d;
}

LossAndGradient directional_loss(const EmbedderBackend& backend, const Embedding& direction, const Raster& generated,
                                 const Embedding& source_embedding) {
  const Embedding gen = backend.embed_image(generated);
  if (gen.size() != direction.size() || gen.size() != source_embedding.size()) {
    throw Error("embedding lengths differ between text and image");
  }
  Embedding delta(gen.size());
  for (std::size_t i = 0; i < gen.size(); ++i) delta[i] = gen[i] - source_embedding[i];

  const double raw_a = norm(delta);
  const double na = std::max(raw_a, kNormFloor);
  const double nb = std::max(norm(direction), kNormFloor);
  const double ab = dot(delta, direction);

  LossAndGradient out;
  out.loss = 1.0 - ab / (na * nb);
  Embedding upstream(gen.size());
  for (std::size_t i = 0; i < gen.size(); ++i) {
    upstream[i] = -direction[i] / (na * nb);
    if (raw_a > kNormFloor) upstream[i] += ab * delta[i] / (na * na * na * nb);
  }
  out.grad = backend.image_vjp(generated, upstream);
  return out;
}

LossAndGradient directional_loss(const EmbedderBackend& backend, const std::string& prompt,
                                 const std::string& reference, const Raster& generated, const Raster& source) {
  const int s = backend.input_size();
  if (generated.width != s || generated.height != s || source.width != s || source.height != s) {
    throw Error("directional_loss expects images at the backend input size " + std::to_string(s));
  }
  return directional_loss(backend, text_direction(backend, prompt, reference), generated, backend.embed_image(source));
}

int patch_side(const PixelRect& area, double patch_fraction) {
  return std::max(1, int(std::lround(patch_fraction * std::max(area.width, area.height))));
}

std::vector<Patch> sample_patches(const PixelRect& area, double patch_fraction, int patch_count,
                                  double perspective_strength, Rng& rng) {
  std::vector<Patch> out;
  const int side = patch_side(area, patch_fraction);
  const double jitter = perspective_strength * side / 2.0;
  for (int i = 0; i < patch_count; ++i) {
    Patch p;
    p.rect = {rng.uniform_int(area.x, area.right() - 1), rng.uniform_int(area.y, area.bottom() - 1), side, side};
    const Quad corners = shifted(rect_corners(side, side), p.rect.x, p.rect.y);
    p.quad = corners;
    for (int attempt = 0; attempt < 16; ++attempt) {
      Quad q = corners;
      for (auto& c : q) {
        c.x += rng.uniform(-jitter, jitter);
        c.y += rng.uniform(-jitter, jitter);
      }
      if (is_valid_quad(q)) {
        p.quad = q;
        break;
      }
    }
    out.push_back(p);
  }
  return out;
}

LossAndGradient content_loss_l2(const Raster& current, const Raster& initial) {
  if (!current.same_shape(initial)) throw Error("content loss needs equally sized rasters");
  LossAndGradient out;
  out.grad = Raster(current.width, current.height);
  const double n = double(current.pixels.size());
  if (n == 0) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < current.pixels.size(); ++i) {
    const double d = current.pixels[i] - initial.pixels[i];
    sum += d * d;
    out.grad.pixels[i] = 2.0 * d / n;
  }
  out.loss = sum / n;
  return out;
}

double clip_score(const EmbedderBackend& backend, const Raster& image, const std::string& prompt) {
  const Embedding a = backend.embed_image(resize_to_backend(image, backend.input_size()));
  const Embedding b = backend.embed_text(prompt);
  if (a.size() != b.size()) throw Error("embedding lengths differ between text and image");
  return dot(a, b) / (std::max(norm(a), kNormFloor) * std::max(norm(b), kNormFloor));
}

TotalLoss total_loss(const EmbedderBackend& backend, const GuidanceConfig& config, const Raster& current,
                     const Raster& initial, Rng& rng) {
  if (!current.same_shape(initial)) throw Error("current and initial rasters differ in size");
  validate(config, current.width, current.height);
  const int s = backend.input_size();

  TotalLoss out;
  out.grad = Raster(current.width, current.height);

  for (std::size_t ri = 0; ri < config.rois.size(); ++ri) {
    const RoiPrompt& roi = config.rois[ri];
    const Embedding direction = text_direction(backend, roi.prompt, config.reference_text);
    const Raster roi_current = crop(current, roi.area);
    const Raster roi_initial = crop(initial, roi.area);
    Raster roi_grad(roi.area.width, roi.area.height);

    // Whole-ROI term, no augmentation.
    {
      const Resize resize(roi.area.width, roi.area.height, s, s);
      const auto term = directional_loss(backend, direction, resize.apply(roi_current),
                                         backend.embed_image(resize.apply(roi_initial)));
      out.loss += roi.roi_weight * term.loss;
      out.terms.push_back({LossTerm::Kind::roi, int(ri), roi.roi_weight, term.loss});
      add_scaled(roi_grad, resize.adjoint(term.grad), roi.roi_weight);
    }

    if (roi.patch_count > 0) {
      const double weight = roi.patch_weight_total / roi.patch_count;
      const auto patches =
          sample_patches(roi.area, roi.patch_fraction, roi.patch_count, roi.perspective_strength, rng);
      for (const Patch& patch : patches) {
        // Patches are cut from the ROI crop, so any overhang is zero.
        const PixelRect local = shifted(patch.rect, -roi.area.x, -roi.area.y);
        const Quad quad = shifted(patch.quad, -patch.rect.x, -patch.rect.y);
        const PerspectiveWarp warp(local.width, local.height, quad);
        const Resize resize(local.width, local.height, s, s);
        const Raster generated = resize.apply(warp.apply(crop(roi_current, local)));
        const Raster source_patch = crop(roi_initial, local);
        const Raster source = resize.apply(config.warp_source_patches ? warp.apply(source_patch) : source_patch);
        const auto term = directional_loss(backend, direction, generated, backend.embed_image(source));
        out.loss += weight * term.loss;
        out.terms.push_back({LossTerm::Kind::patch, int(ri), weight, term.loss});
        Raster g = warp.adjoint(resize.adjoint(term.grad));
        for (auto& v : g.pixels) v *= weight;
        accumulate_crop_gradient(g, local, roi_grad);
      }
    }
    accumulate_crop_gradient(roi_grad, roi.area, out.grad);
  }

  if (config.content_weight > 0.0) {
    const auto content = content_loss_l2(current, initial);
    out.loss += config.content_weight * content.loss;
    out.terms.push_back({LossTerm::Kind::content, -1, config.content_weight, content.loss});
    add_scaled(out.grad, content.grad, config.content_weight);
  }
  return out;
}

}  // namespace vexel
