#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vexel/document.hpp"
#include "vexel/raster.hpp"

namespace vexel {

/// Settings for a single vectorization pass.
struct RoundSpec {
  /// Target color count; more colors give more, smaller elements.
  int n_colors = 10;
  /// Region to trace; the whole canvas when absent.
  std::optional<PixelRect> region;
  double simplify_tolerance = 1.0;
  double fit_tolerance = 1.0;
  /// Components with fewer pixels than this are discarded.
  double min_area = 16.0;
};

struct VectorizeConfig {
  std::vector<RoundSpec> rounds;
  std::uint64_t seed = 0;

  /// Two full-canvas rounds with 10 and 30 colors.
  static VectorizeConfig defaults();
};

/// Throws Error unless there is at least one round, the first round covers
/// the full canvas, and every round has n_colors >= 1 and positive
/// tolerances with its region inside the canvas.
void validate(const VectorizeConfig& config, int width, int height);

/// Per-pixel palette indices, row-major.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;

  int at(int x, int y) const { return labels[std::size_t(y) * width + x]; }
};

struct Quantization {
  /// Sorted by ascending luminance.
  std::vector<Rgb> palette;
  LabelMap labels;
};

/// k-means in RGB: k-means++ seeding from `seed`, at most 20 Lloyd
/// iterations (stopping once no centroid moves by 1e-4 or more), pixels
/// labeled with their nearest centroid. An image with at most n_colors
/// distinct colors gets exactly those colors as its palette.
Quantization quantize_colors(const Raster& image, int n_colors, std::uint64_t seed);

using Polygon = std::vector<Point>;

/// Outer boundary of one 4-connected component.
struct Contour {
  Polygon polygon;
  std::size_t pixel_count = 0;
};

/// Pixel-edge boundaries of every 4-connected component labelled
/// color_index, in raster order of each component's first pixel. Vertices
/// sit on pixel corners (canvas coordinates), only direction changes are
/// kept, and the orientation has positive shoelace area.
std::vector<Contour> trace_components(const LabelMap& labels, int color_index);

std::vector<Polygon> extract_contours(const LabelMap& labels, int color_index);

/// Twice the signed shoelace area.
double signed_area(const Polygon& poly);

/// Douglas-Peucker on a closed polygon. tolerance <= 0 returns the input.
/// Returns nullopt when fewer than three non-collinear vertices remain.
std::optional<Polygon> simplify_polygon(const Polygon& poly, double tolerance);

/// Least-squares cubic fit of a closed polygon, split at corners and
/// recursively at the worst vertex until every polygon vertex lies within
/// fit_tolerance of the curve. Requires at least 3 vertices.
CubicPath fit_beziers(const Polygon& poly, double fit_tolerance);

/// Largest distance from a polygon vertex to the path (dense sampling).
double max_vertex_deviation(const Polygon& poly, const CubicPath& path);

/// Shifts a region-local path to canvas coordinates and keeps every control
/// point inside the region, subdividing stray segments before clamping.
CubicPath contain_in_region(const CubicPath& local, const PixelRect& region);

/// Quantize, trace, simplify and fit one round. Elements have alpha 1, are
/// ordered by filled area (largest first) and receive ids first_id, first_id+1, ...
/// Region rounds keep every control point inside the region.
Round vectorize_round(const Raster& image, const RoundSpec& spec, std::uint64_t seed, ElementId first_id = 0);

/// All rounds stacked in config order. Round 1 starts with a canvas-sized
/// rectangle in the image's mean color so every pixel is covered.
VectorDocument vectorize(const Raster& image, const VectorizeConfig& config);

/// Mean color of the image.
Rgb mean_color(const Raster& image);

}  // namespace vexel
