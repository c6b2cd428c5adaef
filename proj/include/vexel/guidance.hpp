#pragma once

#include <string>
#include <vector>

#include "vexel/common.hpp"
#include "vexel/embedder.hpp"
#include "vexel/image_ops.hpp"
#include "vexel/raster.hpp"

namespace vexel {

/// A region of interest with its own prompt and augmentation settings.
struct RoiPrompt {
  PixelRect area;
  std::string prompt;
  double roi_weight = 30.0;
  int patch_count = 64;
  /// Shared by all patches: each patch term is weighted total / count.
  double patch_weight_total = 80.0;
  /// Patch side as a fraction of the ROI's longer edge.
  double patch_fraction = 0.8;
  /// Corner jitter of the perspective augmentation, as a fraction of half
  /// the patch side. Must lie in [0, 1).
  double perspective_strength = 0.3;
};

struct GuidanceConfig {
  std::vector<RoiPrompt> rois;
  std::string reference_text = "photo";
  /// Weight of the mean-squared pixel loss against the initial image.
  double content_weight = 0.0;
  /// Also warp the source patch with the same quad. Off: only the
  /// generated patch is augmented.
  bool warp_source_patches = false;
};

/// Throws Error unless there is at least one ROI, every area has positive
/// size inside the canvas, patch counts and weights are non-negative,
/// patch_fraction is in (0, 1] and perspective_strength in [0, 1).
void validate(const GuidanceConfig& config, int width, int height);

struct LossAndGradient {
  double loss = 0.0;
  Raster grad;
};

/// 1 - cos(dI, dT) with dT = E_T(prompt) - E_T(reference) and
/// dI = E_I(generated) - E_I(source); both norms are floored at 1e-6.
/// The gradient is with respect to the generated image's pixels. Throws
/// Error("degenerate text direction") when |dT| < 1e-6.
LossAndGradient directional_loss(const EmbedderBackend& backend, const std::string& prompt,
                                 const std::string& reference, const Raster& generated, const Raster& source);

/// Same loss with the text direction and source embedding precomputed.
LossAndGradient directional_loss(const EmbedderBackend& backend, const Embedding& text_direction,
                                 const Raster& generated, const Embedding& source_embedding);

/// E_T(prompt) - E_T(reference), rejecting directions shorter than 1e-6.
Embedding text_direction(const EmbedderBackend& backend, const std::string& prompt, const std::string& reference);

struct Patch {
  PixelRect rect;  // canvas coordinates; may overhang the ROI
  Quad quad;       // jittered corners, canvas coordinates
};

/// Square patches whose side is round(fraction * longer ROI edge) and whose
/// top-left pixel is drawn uniformly inside the ROI. Quads jitter each
/// corner coordinate by U(-strength, strength) * side / 2 and are redrawn
/// until convex.
std::vector<Patch> sample_patches(const PixelRect& area, double patch_fraction, int patch_count,
                                  double perspective_strength, Rng& rng);

/// Side length used by sample_patches.
int patch_side(const PixelRect& area, double patch_fraction);

/// Mean over pixels and channels of (current - initial)^2.
LossAndGradient content_loss_l2(const Raster& current, const Raster& initial);

/// Cosine similarity of the resized image's embedding and the prompt's.
double clip_score(const EmbedderBackend& backend, const Raster& image, const std::string& prompt);

struct LossTerm {
  enum class Kind { roi, patch, content };
  Kind kind = Kind::roi;
  int roi = -1;  // index into config.rois; -1 for content
  double weight = 0.0;
  double value = 0.0;  // unweighted
};

struct TotalLoss {
  double loss = 0.0;
  Raster grad;  // over `current`
  std::vector<LossTerm> terms;
};

/// Weighted sum of, per ROI, the full-ROI directional term and the patch
/// terms (fresh patches drawn from rng), plus the content term when its
/// weight is positive. Crops of `initial` serve as sources throughout.
TotalLoss total_loss(const EmbedderBackend& backend, const GuidanceConfig& config, const Raster& current,
                     const Raster& initial, Rng& rng);

}  // namespace vexel
