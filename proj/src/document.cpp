#include "vexel/document.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <unordered_map>

namespace vexel {

CubicPath::CubicPath(std::vector<Point> points) : points_(std::move(points)) {
  if (points_.empty() || points_.size() % 3 != 0) {
    throw Error("cubic path needs a positive multiple of 3 control points, got " +
                std::to_string(points_.size()));
  }
  for (const auto& p : points_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error("cubic path has a non-finite control point");
  }
}

CubicPath CubicPath::rectangle(const Rect& r) {
  const Point corners[4] = {{r.x, r.y}, {r.right(), r.y}, {r.right(), r.bottom()}, {r.x, r.bottom()}};
  std::vector<Point> pts;
  pts.reserve(12);
  for (int i = 0; i < 4; ++i) {
    const Point a = corners[i];
    const Point b = corners[(i + 1) % 4];
    pts.push_back(a);
    pts.push_back({a.x + (b.x - a.x) / 3.0, a.y + (b.y - a.y) / 3.0});
    pts.push_back({a.x + 2.0 * (b.x - a.x) / 3.0, a.y + 2.0 * (b.y - a.y) / 3.0});
  }
  return CubicPath(std::move(pts));
}

std::array<Point, 4> CubicPath::segment(std::size_t i) const {
  const std::size_t base = 3 * i;
  return {points_[base], points_[base + 1], points_[base + 2], points_[(base + 3) % points_.size()]};
}

Rect CubicPath::bounds() const {
  if (points_.empty()) return {};
  double x0 = points_[0].x, x1 = x0, y0 = points_[0].y, y1 = y0;
  for (const auto& p : points_) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

std::size_t VectorDocument::element_count() const {
  std::size_t n = 0;
  for (const auto& r : rounds) n += r.elements.size();
  return n;
}

void validate(const VectorDocument& doc) {
  if (doc.width <= 0 || doc.height <= 0) {
    throw Error("document size must be positive, got " + std::to_string(doc.width) + "x" +
                std::to_string(doc.height));
  }
  std::set<ElementId> seen;
  for (const auto& round : doc.rounds) {
    for (const auto& e : round.elements) {
      if (!seen.insert(e.id).second) throw Error("duplicate element id " + std::to_string(e.id));
      if (e.path.size() == 0) throw Error("element " + std::to_string(e.id) + " has an empty path");
    }
  }
}

ElementMask ElementMask::all(const VectorDocument& doc) {
  ElementMask m;
  for (auto id : paint_order(doc)) m.ids.insert(id);
  return m;
}

namespace {

void push_shape(ParamVector& out, const PathElement& e) {
  const auto& pts = e.path.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out.values.push_back(pts[i].x);
    out.layout.push_back({e.id, ParamSlot::Field::x, std::uint32_t(i)});
    out.values.push_back(pts[i].y);
    out.layout.push_back({e.id, ParamSlot::Field::y, std::uint32_t(i)});
  }
}

void push_color(ParamVector& out, const PathElement& e) {
  using F = ParamSlot::Field;
  const double channels[4] = {e.fill.r, e.fill.g, e.fill.b, e.fill.a};
  const F fields[4] = {F::r, F::g, F::b, F::a};
  for (int c = 0; c < 4; ++c) {
    out.values.push_back(channels[c]);
    out.layout.push_back({e.id, fields[c], 0});
  }
}

}  // namespace

ParamVector flatten_params(const VectorDocument& doc, ParamGroup group, const ElementMask& mask) {
  std::set<ElementId> present;
  for (const auto& round : doc.rounds)
    for (const auto& e : round.elements) present.insert(e.id);
  for (auto id : mask.ids) {
    if (!present.count(id)) throw Error("mask references unknown element id " + std::to_string(id));
  }

  ParamVector out;
  out.group = group;
  for (const auto& round : doc.rounds) {
    for (const auto& e : round.elements) {
      if (!mask.contains(e.id)) continue;
      if (group != ParamGroup::color) push_shape(out, e);
      if (group != ParamGroup::shape) push_color(out, e);
    }
  }
  return out;
}

ParamVector flatten_params(const VectorDocument& doc, ParamGroup group) {
  return flatten_params(doc, group, ElementMask::all(doc));
}

VectorDocument apply_params(const VectorDocument& doc, const ParamVector& p) {
  if (p.values.size() != p.layout.size()) throw Error("parameter vector and layout lengths differ");

  VectorDocument out = doc;
  std::unordered_map<ElementId, PathElement*> index;
  for (auto& round : out.rounds)
    for (auto& e : round.elements) index[e.id] = &e;

  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const ParamSlot& slot = p.layout[i];
    auto it = index.find(slot.element);
    if (it == index.end()) throw Error("layout references unknown element id " + std::to_string(slot.element));
    PathElement& e = *it->second;
    const double v = p.values[i];
    using F = ParamSlot::Field;
    switch (slot.field) {
      case F::x:
      case F::y: {
        if (slot.point >= e.path.size()) {
          throw Error("layout point index " + std::to_string(slot.point) + " out of range for element " +
                      std::to_string(slot.element));
        }
        if (!std::isfinite(v)) throw Error("non-finite coordinate for element " + std::to_string(slot.element));
        Point q = e.path[slot.point];
        (slot.field == F::x ? q.x : q.y) = v;
        e.path.set(slot.point, q);
        break;
      }
      case F::r: e.fill.r = std::clamp(v, 0.0, 1.0); break;
      case F::g: e.fill.g = std::clamp(v, 0.0, 1.0); break;
      case F::b: e.fill.b = std::clamp(v, 0.0, 1.0); break;
      case F::a: e.fill.a = std::clamp(v, 0.0, 1.0); break;
    }
  }
  return out;
}

ElementMask select_intersecting(const VectorDocument& doc, const Rect& rect) {
  if (!rect.has_area()) throw Error("selection rectangle must have positive area");
  ElementMask m;
  for (const auto& round : doc.rounds) {
    for (const auto& e : round.elements) {
      const Rect b = e.path.bounds();
      const bool overlap = b.x <= rect.right() && rect.x <= b.right() && b.y <= rect.bottom() &&
                           rect.y <= b.bottom();
      if (overlap) m.ids.insert(e.id);
    }
  }
  return m;
}

std::vector<ElementId> paint_order(const VectorDocument& doc) {
  std::vector<ElementId> ids;
  ids.reserve(doc.element_count());
  for (const auto& round : doc.rounds)
    for (const auto& e : round.elements) ids.push_back(e.id);
  return ids;
}

ElementId next_element_id(const VectorDocument& doc) {
  ElementId next = 0;
  for (auto id : paint_order(doc)) next = std::max(next, id + 1);
  return next;
}

}  // namespace vexel
