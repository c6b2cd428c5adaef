#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "vexel/document.hpp"
#include "vexel/embedder.hpp"
#include "vexel/guidance.hpp"
#include "vexel/rasterizer.hpp"

namespace vexel {

struct AdamState {
  int t = 0;
  std::vector<double> m;
  std::vector<double> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of params in place. Empty moment vectors
/// are sized on first use. Throws Error naming the step on a length
/// mismatch or a non-finite gradient.
void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grads, double lr);

enum class OptimizeMode { both, shape_only, color_only };

struct OptimizeConfig {
  int iterations = 150;
  double lr_shape = 0.2;
  double lr_color = 0.01;
  OptimizeMode mode = OptimizeMode::both;
  /// Elements allowed to change; unset means every element.
  std::optional<ElementMask> mask;
  std::uint64_t seed = 0;
  /// Snapshot period in iterations; 0 disables snapshots.
  int snapshot_every = 10;
  GuidanceConfig guidance;
  RenderSettings render;
};

/// Throws Error on negative iterations, learning rates or snapshot period.
void validate(const OptimizeConfig& config);

struct IterationRecord {
  double loss = 0.0;  // before the step
  std::vector<LossTerm> terms;
};

struct RunReport {
  std::vector<IterationRecord> history;
  /// (iteration, document) pairs: the input at 0, then the state after
  /// every snapshot_every-th step. The final document is always included.
  std::vector<std::pair<int, VectorDocument>> snapshots;
  VectorDocument final_document;

  std::vector<double> losses() const;
};

/// Called after each step with the 1-based iteration count, that iteration's
/// pre-step loss and, on snapshot iterations, the rendered snapshot.
using ProgressCallback = std::function<void(int iteration, double loss, const Raster* snapshot)>;

struct GradientSplit {
  ParamVector shape;
  ParamVector color;
};

/// Partitions a full gradient (layout as flatten_params(doc, both)) into the
/// shape and color groups of the masked elements. Inactive groups come back
/// empty. Layouts equal flatten_params(doc, group, mask).
GradientSplit split_gradients(const ParamVector& full, OptimizeMode mode, const ElementMask& mask);

/// Optimizes doc against the guidance losses, using `initial` as the
/// source image throughout. Deterministic for fixed inputs and seed.
RunReport optimize(const VectorDocument& doc, const Raster& initial, const OptimizeConfig& config,
                   const EmbedderBackend& backend, const ProgressCallback& progress = {});

}  // namespace vexel
