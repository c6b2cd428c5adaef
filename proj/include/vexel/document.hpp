#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "vexel/common.hpp"

namespace vexel {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct Rgba {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  double a = 1.0;
  bool operator==(const Rgba&) const = default;
};

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  bool operator==(const Rgb&) const = default;
};

/// Closed path of k cubic segments stored as 3k control points:
/// [anchor0, handle0a, handle0b, anchor1, ...]. Segment i runs from
/// anchor i to anchor i+1, and the last segment returns to anchor 0.
/// The point count is fixed at construction.
class CubicPath {
 public:
  CubicPath() = default;
  /// Throws Error unless points.size() is a positive multiple of 3 and all
  /// coordinates are finite.
  explicit CubicPath(std::vector<Point> points);

  /// Axis-aligned rectangle as four straight cubic segments.
  static CubicPath rectangle(const Rect& r);

  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  std::size_t segment_count() const { return points_.size() / 3; }
  const Point& operator[](std::size_t i) const { return points_[i]; }

  /// Writes a single coordinate; topology cannot change through this.
  void set(std::size_t index, Point p) { points_.at(index) = p; }

  /// Control points of segment i: anchor, two handles, next anchor.
  std::array<Point, 4> segment(std::size_t i) const;

  /// Bounding box of the control points.
  Rect bounds() const;

  bool operator==(const CubicPath&) const = default;

 private:
  std::vector<Point> points_;
};

using ElementId = std::int64_t;

struct PathElement {
  CubicPath path;
  Rgba fill;
  ElementId id = 0;
  bool operator==(const PathElement&) const = default;
};

/// One vectorization pass; elements are listed back to front.
struct Round {
  std::vector<PathElement> elements;
  int precision = 0;
  std::optional<PixelRect> region;
  bool operator==(const Round&) const = default;
};

/// Rounds are painted in order, each entirely above the previous one.
struct VectorDocument {
  std::vector<Round> rounds;
  int width = 0;
  int height = 0;

  std::size_t element_count() const;
  bool operator==(const VectorDocument&) const = default;
};

/// Throws Error on non-positive size or duplicate element ids.
void validate(const VectorDocument& doc);

enum class ParamGroup { shape, color, both };

/// Identifies one optimizable scalar of one element.
struct ParamSlot {
  enum class Field : std::uint8_t { x, y, r, g, b, a };
  ElementId element = 0;
  Field field = Field::x;
  /// Control-point index for x/y; unused for color channels.
  std::uint32_t point = 0;

  bool is_shape() const { return field == Field::x || field == Field::y; }
  bool operator==(const ParamSlot&) const = default;
};

struct ParamVector {
  std::vector<double> values;
  std::vector<ParamSlot> layout;
  ParamGroup group = ParamGroup::both;

  std::size_t size() const { return values.size(); }
};

/// Subset of a document's element ids selected for editing.
struct ElementMask {
  std::set<ElementId> ids;

  static ElementMask all(const VectorDocument& doc);
  bool contains(ElementId id) const { return ids.count(id) != 0; }
  bool operator==(const ElementMask&) const = default;
};

/// Every scalar of `group` for the masked elements, in paint order. For the
/// `both` group each element contributes its coordinates (x, y interleaved)
/// followed by r, g, b, a. Throws Error naming any mask id absent from doc.
ParamVector flatten_params(const VectorDocument& doc, ParamGroup group, const ElementMask& mask);
ParamVector flatten_params(const VectorDocument& doc, ParamGroup group);

/// Copy of doc with the scalars named by p.layout replaced. Color channels
/// are clamped to [0, 1]; every other scalar is left bit-identical.
/// Throws Error when the layout references something doc does not have.
VectorDocument apply_params(const VectorDocument& doc, const ParamVector& p);

/// Elements whose control-point bounding box overlaps rect (closed
/// intervals). Throws Error when rect has no area.
ElementMask select_intersecting(const VectorDocument& doc, const Rect& rect);

std::vector<ElementId> paint_order(const VectorDocument& doc);

/// Largest id in doc plus one (0 for an empty document).
ElementId next_element_id(const VectorDocument& doc);

}  // namespace vexel
