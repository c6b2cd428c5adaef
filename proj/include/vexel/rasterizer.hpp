#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vexel/document.hpp"
#include "vexel/raster.hpp"

namespace vexel {

struct RenderSettings {
  /// Width of the soft edge in pixels: coverage ramps from 0 to 1 over
  /// signed distances in [-bandwidth, +bandwidth].
  double bandwidth = 0.5;
  /// Fixed number of polyline pieces per cubic segment.
  int segments_per_cubic = 16;
  Rgb background{1.0, 1.0, 1.0};
};

/// Throws Error when bandwidth <= 0 or segments_per_cubic < 4.
void validate(const RenderSettings& settings);

/// Clamped cubic smoothstep on u in [-1, 1]: 0 below, 1 above, s(0) = 0.5.
double coverage_ramp(double u);
double coverage_ramp_derivative(double u);

/// Closed polyline; edge i joins vertex i to vertex (i + 1) % size.
using Polyline = std::vector<Point>;

/// Samples each cubic segment at t = j / K for j = 0..K-1, so a path with
/// k segments yields k * K vertices (segment ends are shared).
Polyline flatten_path(const CubicPath& path, int segments_per_cubic);

/// Nonzero-rule winding number of the polyline around p (ray towards +x,
/// half-open crossing rule on y).
int winding_number(const Polyline& poly, Point p);

/// Distance from p to the polyline boundary, positive inside by nonzero
/// winding. Brute force over every edge.
double signed_distance(const Polyline& poly, Point p);

/// coverage_ramp(signed_distance / bandwidth).
double signed_coverage(const Polyline& poly, Point p, double bandwidth);

/// Everything the reverse pass needs, recorded by render_with_tape.
class RenderTape {
 public:
  /// One element's contribution at one pixel.
  struct Fragment {
    std::uint32_t element = 0;  // paint-order index
    std::uint32_t edge = kNoEdge;
    double coverage = 0.0;
    double t = 0.0;  // closest-point parameter on `edge`
    // d(coverage) / d(closest point); zero when the edge is saturated.
    double dq_x = 0.0;
    double dq_y = 0.0;
    bool operator==(const Fragment&) const = default;
  };
  static constexpr std::uint32_t kNoEdge = 0xffffffffu;

  int width() const { return width_; }
  int height() const { return height_; }
  const RenderSettings& settings() const { return settings_; }
  const VectorDocument& document() const { return doc_; }

  /// Fragments covering pixel (x, y) in paint order.
  std::pair<const Fragment*, const Fragment*> fragments(int x, int y) const;
  std::size_t fragment_count() const;

  bool operator==(const RenderTape& o) const {
    return width_ == o.width_ && height_ == o.height_ && doc_ == o.doc_ && tiles_ == o.tiles_;
  }

 private:
  friend std::pair<Raster, RenderTape> render_with_tape(const VectorDocument&, const RenderSettings&);
  friend ParamVector backward(const RenderTape&, const Raster&);

  struct Tile {
    int row_begin = 0;
    int row_end = 0;
    std::vector<std::uint32_t> offsets;  // per pixel, CSR into fragments
    std::vector<Fragment> fragments;
    bool operator==(const Tile&) const = default;
  };

  int width_ = 0;
  int height_ = 0;
  RenderSettings settings_;
  VectorDocument doc_;
  std::vector<Tile> tiles_;
};

/// Back-to-front "over" compositing of every element, weighted by soft
/// coverage at pixel centers, over the opaque background. Deterministic for
/// any thread count. Throws Error on an empty canvas or invalid settings.
Raster render(const VectorDocument& doc, const RenderSettings& settings = {});

/// Same raster as render(), plus the tape for backward().
std::pair<Raster, RenderTape> render_with_tape(const VectorDocument& doc, const RenderSettings& settings = {});

/// Reverse-mode gradient of sum(pixel_grad * render(doc)) with respect to
/// every parameter of the taped document, laid out as
/// flatten_params(doc, ParamGroup::both). Throws Error on a size mismatch.
ParamVector backward(const RenderTape& tape, const Raster& pixel_grad);

/// Copy of doc scaled so that it spans a width x height canvas.
VectorDocument scale_document(const VectorDocument& doc, int width, int height);

}  // namespace vexel
