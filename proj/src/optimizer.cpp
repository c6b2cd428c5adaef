#include "vexel/optimizer.hpp"

#include <cmath>
#include <string>

namespace vexel {

void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grads, double lr) {
  const int step = state.t + 1;
  if (params.size() != grads.size()) {
    throw Error("adam step " + std::to_string(step) + ": " + std::to_string(grads.size()) + " gradients for " +
                std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw Error("non-finite gradient at adam step " + std::to_string(step) + " (parameter " + std::to_string(i) + ")");
    }
  }
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error("adam state does not match the parameter count");
  }
  state.t = step;
  const double c1 = 1.0 - std::pow(state.beta1, step);
  const double c2 = 1.0 - std::pow(state.beta2, step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void validate(const OptimizeConfig& config) {
  if (config.iterations < 0) throw Error("iterations must be non-negative");
  if (!(config.lr_shape >= 0.0) || !(config.lr_color >= 0.0)) throw Error("learning rates must be non-negative");
  if (config.snapshot_every < 0) throw Error("snapshot_every must be non-negative");
  validate(config.render);
}

std::vector<double> RunReport::losses() const {
  std::vector<double> out;
  out.reserve(history.size());
  for (const auto& h : history) out.push_back(h.loss);
  return out;
}

GradientSplit split_gradients(const ParamVector& full, OptimizeMode mode, const ElementMask& mask) {
  GradientSplit out;
  out.shape.group = ParamGroup::shape;
  out.color.group = ParamGroup::color;
  const bool want_shape = mode != OptimizeMode::color_only;
  const bool want_color = mode != OptimizeMode::shape_only;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const ParamSlot& slot = full.layout[i];
    if (!mask.contains(slot.element)) continue;
    ParamVector& target = slot.is_shape() ? out.shape : out.color;
    if (slot.is_shape() ? !want_shape : !want_color) continue;
    target.values.push_back(full.values[i]);
    target.layout.push_back(slot);
  }
  return out;
}

namespace {

void step_group(const VectorDocument& doc, const ParamVector& grad, ParamGroup group, const ElementMask& mask,
                AdamState& state, double lr, VectorDocument& next) {
  if (grad.size() == 0) return;
  ParamVector params = flatten_params(doc, group, mask);
  if (params.layout != grad.layout) throw Error("gradient layout does not match the document parameters");
  adam_step(state, params.values, grad.values, lr);
  next = apply_params(next, params);
}

}  // namespace

RunReport optimize(const VectorDocument& doc, const Raster& initial, const OptimizeConfig& config,
                   const EmbedderBackend& backend, const ProgressCallback& progress) {
  validate(config);
  validate(doc);
  if (doc.width != initial.width || doc.height != initial.height) {
    throw Error("document is " + std::to_string(doc.width) + "x" + std::to_string(doc.height) +
                " but the initial image is " + std::to_string(initial.width) + "x" + std::to_string(initial.height));
  }
  validate(config.guidance, doc.width, doc.height);
  const ElementMask mask = config.mask ? *config.mask : ElementMask::all(doc);
  flatten_params(doc, ParamGroup::both, mask);  // rejects unknown ids up front

  RunReport report;
  report.history.reserve(std::size_t(config.iterations));
  report.snapshots.emplace_back(0, doc);
  VectorDocument current = doc;
  AdamState shape_state, color_state;
  Rng rng(config.seed);

  for (int it = 1; it <= config.iterations; ++it) {
    auto [image, tape] = render_with_tape(current, config.render);
    TotalLoss loss = total_loss(backend, config.guidance, image, initial, rng);
    if (!std::isfinite(loss.loss)) {
      std::string detail;
      for (const auto& t : loss.terms) detail += " " + std::to_string(t.value);
      throw Error("non-finite loss at iteration " + std::to_string(it) + "; term values:" + detail);
    }
    report.history.push_back({loss.loss, std::move(loss.terms)});

    const GradientSplit split = split_gradients(backward(tape, loss.grad), config.mode, mask);
    VectorDocument next = current;
    step_group(current, split.shape, ParamGroup::shape, mask, shape_state, config.lr_shape, next);
    step_group(current, split.color, ParamGroup::color, mask, color_state, config.lr_color, next);
    current = std::move(next);

    const bool snap = config.snapshot_every > 0 && it % config.snapshot_every == 0;
    const bool last = it == config.iterations;
    if (snap || last) report.snapshots.emplace_back(it, current);
    if (progress) {
      if (snap) {
        const Raster frame = render(current, config.render);
        progress(it, report.history.back().loss, &frame);
      } else {
        progress(it, report.history.back().loss, nullptr);
      }
    }
  }
  report.final_document = std::move(current);
  return report;
}

}  // namespace vexel
