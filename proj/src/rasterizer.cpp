#include "vexel/rasterizer.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <string>

namespace vexel {

namespace {

constexpr int kTileRows = 16;
constexpr int kMaxGridCells = 64;

struct SegmentHit {
  double distance = 0.0;
  double t = 0.0;
  Point closest;
};

SegmentHit closest_on_segment(Point p, Point a, Point b) {
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  const double len2 = ex * ex + ey * ey;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * ex + (p.y - a.y) * ey) / len2, 0.0, 1.0);
  const Point q{a.x + t * ex, a.y + t * ey};
  return {std::hypot(p.x - q.x, p.y - q.y), t, q};
}

// Crossing of the horizontal line through y by edge a->b, half-open in y.
bool crosses_row(Point a, Point b, double y) { return (a.y <= y) != (b.y <= y); }

double crossing_x(Point a, Point b, double y) { return a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y); }

int crossing_direction(Point a, Point b) { return b.y > a.y ? 1 : -1; }

std::array<double, 4> bernstein(double t) {
  const double s = 1.0 - t;
  return {s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t};
}

int clamp_index(double v, int lo, int hi) { return int(std::clamp(v, double(lo), double(hi))); }

std::vector<std::array<double, 4>> bernstein_table(int k) {
  std::vector<std::array<double, 4>> table(k);
  for (int j = 0; j < k; ++j) table[j] = bernstein(double(j) / double(k));
  return table;
}

// Per-element acceleration structures; all queries reproduce the brute-force
// results bit for bit.
struct ElementGeometry {
  Polyline verts;
  Rgba fill;
  std::size_t param_offset = 0;
  std::size_t point_count = 0;

  int px0 = 0, px1 = -1, py0 = 0, py1 = -1;

  double gx0 = 0.0, gy0 = 0.0, cell = 1.0;
  int nx = 0, ny = 0;
  std::vector<std::uint32_t> cell_offsets;
  std::vector<std::uint32_t> cell_edges;

  std::vector<std::uint32_t> row_offsets;
  std::vector<std::uint32_t> row_edges;

  std::size_t edge_count() const { return verts.size(); }
  Point edge_a(std::size_t e) const { return verts[e]; }
  Point edge_b(std::size_t e) const { return verts[(e + 1) % verts.size()]; }
};

ElementGeometry build_geometry(const PathElement& element, const RenderSettings& settings, int width,
                               int height) {
  ElementGeometry g;
  g.verts = flatten_path(element.path, settings.segments_per_cubic);
  g.fill = element.fill;
  g.point_count = element.path.size();
  const double bw = settings.bandwidth;
  const std::size_t n = g.verts.size();

  double x0 = g.verts[0].x, x1 = x0, y0 = g.verts[0].y, y1 = y0;
  for (const auto& v : g.verts) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y);
    y1 = std::max(y1, v.y);
  }

  // Pixel centers that can receive nonzero coverage.
  g.px0 = clamp_index(std::ceil(x0 - bw - 0.5), 0, width);
  g.px1 = clamp_index(std::floor(x1 + bw - 0.5), -1, width - 1);
  g.py0 = clamp_index(std::ceil(y0 - bw - 0.5), 0, height);
  g.py1 = clamp_index(std::floor(y1 + bw - 0.5), -1, height - 1);
  if (g.px0 > g.px1 || g.py0 > g.py1) {
    g.px1 = g.px0 - 1;
    g.py1 = g.py0 - 1;
    return g;
  }

  // Uniform grid over the bandwidth-expanded bounds; each edge is listed in
  // every cell its expanded bounding box touches.
  g.gx0 = x0 - bw;
  g.gy0 = y0 - bw;
  const double ext_w = (x1 - x0) + 2.0 * bw;
  const double ext_h = (y1 - y0) + 2.0 * bw;
  g.cell = std::max(2.0 * bw, std::max(ext_w, ext_h) / kMaxGridCells);
  g.nx = std::max(1, int(std::ceil(ext_w / g.cell)));
  g.ny = std::max(1, int(std::ceil(ext_h / g.cell)));
  auto cell_x = [&](double x) { return std::clamp(int(std::floor((x - g.gx0) / g.cell)), 0, g.nx - 1); };
  auto cell_y = [&](double y) { return std::clamp(int(std::floor((y - g.gy0) / g.cell)), 0, g.ny - 1); };

  std::vector<std::uint32_t> counts(std::size_t(g.nx) * g.ny + 1, 0);
  auto for_cells = [&](std::size_t e, auto&& fn) {
    const Point a = g.edge_a(e), b = g.edge_b(e);
    const int cx0 = cell_x(std::min(a.x, b.x) - bw), cx1 = cell_x(std::max(a.x, b.x) + bw);
    const int cy0 = cell_y(std::min(a.y, b.y) - bw), cy1 = cell_y(std::max(a.y, b.y) + bw);
    for (int cy = cy0; cy <= cy1; ++cy)
      for (int cx = cx0; cx <= cx1; ++cx) fn(std::size_t(cy) * g.nx + cx);
  };
  for (std::size_t e = 0; e < n; ++e) for_cells(e, [&](std::size_t c) { ++counts[c + 1]; });
  for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
  g.cell_offsets = counts;
  g.cell_edges.resize(counts.back());
  std::vector<std::uint32_t> fill = counts;
  for (std::size_t e = 0; e < n; ++e) for_cells(e, [&](std::size_t c) { g.cell_edges[fill[c]++] = std::uint32_t(e); });

  // Edges crossing each pixel-center row, ascending edge order.
  const int rows = g.py1 - g.py0 + 1;
  std::vector<std::uint32_t> row_counts(rows + 1, 0);
  auto for_rows = [&](std::size_t e, auto&& fn) {
    const Point a = g.edge_a(e), b = g.edge_b(e);
    const int r0 = clamp_index(std::floor(std::min(a.y, b.y) - 0.5) - 1.0, g.py0, g.py1 + 1);
    const int r1 = clamp_index(std::ceil(std::max(a.y, b.y) - 0.5) + 1.0, g.py0 - 1, g.py1);
    for (int r = r0; r <= r1; ++r) {
      if (crosses_row(a, b, r + 0.5)) fn(r - g.py0);
    }
  };
  for (std::size_t e = 0; e < n; ++e) for_rows(e, [&](int r) { ++row_counts[r + 1]; });
  for (int r = 1; r <= rows; ++r) row_counts[r] += row_counts[r - 1];
  g.row_offsets = row_counts;
  g.row_edges.resize(row_counts.back());
  std::vector<std::uint32_t> row_fill = row_counts;
  for (std::size_t e = 0; e < n; ++e) for_rows(e, [&](int r) { g.row_edges[row_fill[r]++] = std::uint32_t(e); });
  return g;
}

struct Crossing {
  double x;
  int direction;
};

// Signed-distance derivative direction for a pixel lying exactly on an edge:
// the outward unit normal of that edge.
Point outward_normal(const ElementGeometry& g, std::size_t edge, Point p) {
  const Point a = g.edge_a(edge), b = g.edge_b(edge);
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (len <= 0.0) return {0.0, 0.0};
  Point n{(b.y - a.y) / len, -(b.x - a.x) / len};
  const Point probe{p.x + 1e-7 * n.x, p.y + 1e-7 * n.y};
  if (winding_number(g.verts, probe) != 0) n = {-n.x, -n.y};
  return n;
}

struct PixelCoverage {
  double coverage = 0.0;
  std::uint32_t edge = RenderTape::kNoEdge;
  double t = 0.0;
  double dq_x = 0.0;
  double dq_y = 0.0;
};

PixelCoverage coverage_at(const ElementGeometry& g, Point p, bool inside, double bw) {
  PixelCoverage out;
  const int cx = int(std::floor((p.x - g.gx0) / g.cell));
  const int cy = int(std::floor((p.y - g.gy0) / g.cell));
  double best = bw;
  SegmentHit best_hit;
  if (cx >= 0 && cx < g.nx && cy >= 0 && cy < g.ny) {
    const std::size_t c = std::size_t(cy) * g.nx + cx;
    for (std::uint32_t k = g.cell_offsets[c]; k < g.cell_offsets[c + 1]; ++k) {
      const std::uint32_t e = g.cell_edges[k];
      const SegmentHit hit = closest_on_segment(p, g.edge_a(e), g.edge_b(e));
      if (hit.distance < best) {
        best = hit.distance;
        best_hit = hit;
        out.edge = e;
      }
    }
  }
  if (out.edge == RenderTape::kNoEdge) {
    out.coverage = inside ? 1.0 : 0.0;
    return out;
  }
  const double sd = inside ? best_hit.distance : -best_hit.distance;
  const double u = sd / bw;
  out.coverage = coverage_ramp(u);
  out.t = best_hit.t;
  const double slope = coverage_ramp_derivative(u) / bw;
  if (slope == 0.0) {
    out.edge = RenderTape::kNoEdge;
    return out;
  }
  Point dir;
  if (best_hit.distance > 0.0) {
    const double sign = inside ? 1.0 : -1.0;
    dir = {sign * (best_hit.closest.x - p.x) / best_hit.distance, sign * (best_hit.closest.y - p.y) / best_hit.distance};
  } else {
    dir = outward_normal(g, out.edge, p);
  }
  out.dq_x = slope * dir.x;
  out.dq_y = slope * dir.y;
  return out;
}

struct RawFragment {
  std::uint32_t pixel;
  RenderTape::Fragment fragment;
};

struct Scene {
  std::vector<ElementGeometry> elements;
  std::size_t param_count = 0;
};

Scene build_scene(const VectorDocument& doc, const RenderSettings& settings) {
  validate(settings);
  if (doc.width <= 0 || doc.height <= 0) {
    throw Error("cannot render a zero-area canvas (" + std::to_string(doc.width) + "x" +
                std::to_string(doc.height) + ")");
  }
  std::vector<const PathElement*> ordered;
  for (const auto& round : doc.rounds)
    for (const auto& e : round.elements) ordered.push_back(&e);

  Scene scene;
  scene.elements.resize(ordered.size());
  parallel_for(int(ordered.size()), [&](int i) {
    scene.elements[i] = build_geometry(*ordered[i], settings, doc.width, doc.height);
  });
  for (auto& g : scene.elements) {
    g.param_offset = scene.param_count;
    scene.param_count += 2 * g.point_count + 4;
  }
  return scene;
}

// Renders rows [row_begin, row_end) into `out` (already holding the
// background), optionally collecting fragments.
void render_tile(const Scene& scene, const RenderSettings& settings, int width, int row_begin, int row_end,
                 Raster& out, std::vector<RawFragment>* fragments) {
  const double bw = settings.bandwidth;
  std::vector<Crossing> crossings;
  for (std::size_t ei = 0; ei < scene.elements.size(); ++ei) {
    const ElementGeometry& g = scene.elements[ei];
    const int y0 = std::max(row_begin, g.py0);
    const int y1 = std::min(row_end - 1, g.py1);
    for (int y = y0; y <= y1; ++y) {
      const double cy = y + 0.5;
      crossings.clear();
      int winding = 0;
      const int r = y - g.py0;
      for (std::uint32_t k = g.row_offsets[r]; k < g.row_offsets[r + 1]; ++k) {
        const std::uint32_t e = g.row_edges[k];
        const Point a = g.edge_a(e), b = g.edge_b(e);
        const int dir = crossing_direction(a, b);
        crossings.push_back({crossing_x(a, b, cy), dir});
        winding += dir;
      }
      std::sort(crossings.begin(), crossings.end(), [](const Crossing& l, const Crossing& r) { return l.x < r.x; });
      std::size_t next = 0;
      for (int x = g.px0; x <= g.px1; ++x) {
        const double cx = x + 0.5;
        while (next < crossings.size() && crossings[next].x <= cx) winding -= crossings[next++].direction;
        const PixelCoverage pc = coverage_at(g, {cx, cy}, winding != 0, bw);
        if (pc.coverage <= 0.0) continue;
        const double alpha = g.fill.a * pc.coverage;
        const std::size_t idx = out.index(x, y, 0);
        out.pixels[idx + 0] = alpha * g.fill.r + (1.0 - alpha) * out.pixels[idx + 0];
        out.pixels[idx + 1] = alpha * g.fill.g + (1.0 - alpha) * out.pixels[idx + 1];
        out.pixels[idx + 2] = alpha * g.fill.b + (1.0 - alpha) * out.pixels[idx + 2];
        if (fragments) {
          RenderTape::Fragment f;
          f.element = std::uint32_t(ei);
          f.edge = pc.edge;
          f.coverage = pc.coverage;
          f.t = pc.t;
          f.dq_x = pc.dq_x;
          f.dq_y = pc.dq_y;
          fragments->push_back({std::uint32_t((y - row_begin) * width + x), f});
        }
      }
    }
  }
}

Raster render_impl(const VectorDocument& doc, const RenderSettings& settings, const Scene& scene, std::vector<std::vector<RawFragment>>* tile_fragments) {
  Raster out(doc.width, doc.height);
  for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
    out.pixels[i] = settings.background.r;
    out.pixels[i + 1] = settings.background.g;
    out.pixels[i + 2] = settings.background.b;
  }
  const int tiles = (doc.height + kTileRows - 1) / kTileRows;
  if (tile_fragments) tile_fragments->assign(tiles, {});
  parallel_for(tiles, [&](int t) {
    const int r0 = t * kTileRows;
    const int r1 = std::min(doc.height, r0 + kTileRows);
    render_tile(scene, settings, doc.width, r0, r1, out, tile_fragments ? &(*tile_fragments)[t] : nullptr);
  });
  for (auto& v : out.pixels) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace

void validate(const RenderSettings& settings) {
  if (!(settings.bandwidth > 0.0)) throw Error("render bandwidth must be positive");
  if (settings.segments_per_cubic < 4) throw Error("segments_per_cubic must be at least 4");
}

double coverage_ramp(double u) {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double v = 0.5 * (u + 1.0);
  return v * v * (3.0 - 2.0 * v);
}

double coverage_ramp_derivative(double u) {
  if (u <= -1.0 || u >= 1.0) return 0.0;
  const double v = 0.5 * (u + 1.0);
  return 3.0 * v * (1.0 - v);
}

Polyline flatten_path(const CubicPath& path, int segments_per_cubic) {
  const auto table = bernstein_table(segments_per_cubic);
  Polyline out;
  out.reserve(path.segment_count() * segments_per_cubic);
  for (std::size_t s = 0; s < path.segment_count(); ++s) {
    const auto cp = path.segment(s);
    for (const auto& w : table) {
      out.push_back({w[0] * cp[0].x + w[1] * cp[1].x + w[2] * cp[2].x + w[3] * cp[3].x,
                     w[0] * cp[0].y + w[1] * cp[1].y + w[2] * cp[2].y + w[3] * cp[3].y});
    }
  }
  return out;
}

int winding_number(const Polyline& poly, Point p) {
  int winding = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i], b = poly[(i + 1) % poly.size()];
    if (crosses_row(a, b, p.y) && crossing_x(a, b, p.y) > p.x) winding += crossing_direction(a, b);
  }
  return winding;
}

double signed_distance(const Polyline& poly, Point p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    best = std::min(best, closest_on_segment(p, poly[i], poly[(i + 1) % poly.size()]).distance);
  }
  return winding_number(poly, p) != 0 ? best : -best;
}

double signed_coverage(const Polyline& poly, Point p, double bandwidth) {
  return coverage_ramp(signed_distance(poly, p) / bandwidth);
}

std::pair<const RenderTape::Fragment*, const RenderTape::Fragment*> RenderTape::fragments(int x, int y) const {
  const Tile& tile = tiles_.at(y / kTileRows);
  const std::size_t local = std::size_t(y - tile.row_begin) * width_ + x;
  const Fragment* base = tile.fragments.data();
  return {base + tile.offsets[local], base + tile.offsets[local + 1]};
}

std::size_t RenderTape::fragment_count() const {
  std::size_t n = 0;
  for (const auto& t : tiles_) n += t.fragments.size();
  return n;
}

Raster render(const VectorDocument& doc, const RenderSettings& settings) {
  const Scene scene = build_scene(doc, settings);
  return render_impl(doc, settings, scene, nullptr);
}

std::pair<Raster, RenderTape> render_with_tape(const VectorDocument& doc, const RenderSettings& settings) {
  const Scene scene = build_scene(doc, settings);
  std::vector<std::vector<RawFragment>> raw;
  Raster out = render_impl(doc, settings, scene, &raw);

  RenderTape tape;
  tape.width_ = doc.width;
  tape.height_ = doc.height;
  tape.settings_ = settings;
  tape.doc_ = doc;
  tape.tiles_.resize(raw.size());
  for (std::size_t t = 0; t < raw.size(); ++t) {
    RenderTape::Tile& tile = tape.tiles_[t];
    tile.row_begin = int(t) * kTileRows;
    tile.row_end = std::min(doc.height, tile.row_begin + kTileRows);
    const std::size_t pixels = std::size_t(tile.row_end - tile.row_begin) * doc.width;
    // Stable counting sort by pixel keeps paint order within each pixel.
    tile.offsets.assign(pixels + 1, 0);
    for (const auto& f : raw[t]) ++tile.offsets[f.pixel + 1];
    for (std::size_t i = 1; i <= pixels; ++i) tile.offsets[i] += tile.offsets[i - 1];
    tile.fragments.resize(raw[t].size());
    std::vector<std::uint32_t> cursor(tile.offsets.begin(), tile.offsets.end() - 1);
    for (const auto& f : raw[t]) tile.fragments[cursor[f.pixel]++] = f.fragment;
    raw[t].clear();
    raw[t].shrink_to_fit();
  }
  return {std::move(out), std::move(tape)};
}

ParamVector backward(const RenderTape& tape, const Raster& pixel_grad) {
  if (pixel_grad.width != tape.width_ || pixel_grad.height != tape.height_) {
    throw Error("pixel gradient is " + std::to_string(pixel_grad.width) + "x" + std::to_string(pixel_grad.height) +
                " but the tape was recorded at " + std::to_string(tape.width_) + "x" + std::to_string(tape.height_));
  }
  const VectorDocument& doc = tape.doc_;
  const RenderSettings& settings = tape.settings_;
  const int k = settings.segments_per_cubic;
  const auto table = bernstein_table(k);

  struct ElementInfo {
    Rgba fill;
    std::size_t offset;
    std::size_t points;
    Polyline verts;
  };
  std::vector<ElementInfo> info;
  std::size_t param_count = 0;
  for (const auto& round : doc.rounds) {
    for (const auto& e : round.elements) {
      info.push_back({e.fill, param_count, e.path.size(), flatten_path(e.path, k)});
      param_count += 2 * e.path.size() + 4;
    }
  }

  std::vector<std::vector<double>> tile_grads(tape.tiles_.size());
  parallel_for(int(tape.tiles_.size()), [&](int ti) {
    const RenderTape::Tile& tile = tape.tiles_[ti];
    std::vector<double>& grad = tile_grads[ti];
    grad.assign(param_count, 0.0);
    std::vector<std::array<double, 3>> below;
    for (int y = tile.row_begin; y < tile.row_end; ++y) {
      for (int x = 0; x < tape.width_; ++x) {
        const std::size_t local = std::size_t(y - tile.row_begin) * tape.width_ + x;
        const std::uint32_t f0 = tile.offsets[local], f1 = tile.offsets[local + 1];
        if (f0 == f1) continue;
        const std::size_t gi = pixel_grad.index(x, y, 0);
        std::array<double, 3> up{pixel_grad.pixels[gi], pixel_grad.pixels[gi + 1], pixel_grad.pixels[gi + 2]};
        if (up[0] == 0.0 && up[1] == 0.0 && up[2] == 0.0) continue;

        // Replay the composite to recover the color beneath each fragment.
        below.resize(f1 - f0);
        std::array<double, 3> acc{settings.background.r, settings.background.g, settings.background.b};
        for (std::uint32_t f = f0; f < f1; ++f) {
          const auto& frag = tile.fragments[f];
          const Rgba& c = info[frag.element].fill;
          below[f - f0] = acc;
          const double alpha = c.a * frag.coverage;
          acc = {alpha * c.r + (1.0 - alpha) * acc[0], alpha * c.g + (1.0 - alpha) * acc[1],
                 alpha * c.b + (1.0 - alpha) * acc[2]};
        }

        for (std::uint32_t f = f1; f-- > f0;) {
          const auto& frag = tile.fragments[f];
          const ElementInfo& el = info[frag.element];
          const Rgba& c = el.fill;
          const double alpha = c.a * frag.coverage;
          const auto& under = below[f - f0];
          const std::size_t color = el.offset + 2 * el.points;
          grad[color + 0] += up[0] * alpha;
          grad[color + 1] += up[1] * alpha;
          grad[color + 2] += up[2] * alpha;
          const double d_alpha =
              up[0] * (c.r - under[0]) + up[1] * (c.g - under[1]) + up[2] * (c.b - under[2]);
          grad[color + 3] += d_alpha * frag.coverage;
          if (frag.edge != RenderTape::kNoEdge) {
            const double d_cov = d_alpha * c.a;
            const double gx = d_cov * frag.dq_x;
            const double gy = d_cov * frag.dq_y;
            const std::size_t nverts = el.verts.size();
            const std::size_t ends[2] = {frag.edge, (frag.edge + 1) % nverts};
            const double weights[2] = {1.0 - frag.t, frag.t};
            for (int end = 0; end < 2; ++end) {
              if (weights[end] == 0.0) continue;
              const std::size_t v = ends[end];
              const std::size_t seg = v / std::size_t(k);
              const auto& w = table[v % std::size_t(k)];
              const std::size_t cps[4] = {3 * seg, 3 * seg + 1, 3 * seg + 2, (3 * seg + 3) % el.points};
              for (int i = 0; i < 4; ++i) {
                grad[el.offset + 2 * cps[i]] += weights[end] * w[i] * gx;
                grad[el.offset + 2 * cps[i] + 1] += weights[end] * w[i] * gy;
              }
            }
          }
          up = {up[0] * (1.0 - alpha), up[1] * (1.0 - alpha), up[2] * (1.0 - alpha)};
        }
      }
    }
  });

  ParamVector out = flatten_params(doc, ParamGroup::both);
  std::fill(out.values.begin(), out.values.end(), 0.0);
  for (const auto& grad : tile_grads)
    for (std::size_t i = 0; i < param_count; ++i) out.values[i] += grad[i];
  return out;
}

VectorDocument scale_document(const VectorDocument& doc, int width, int height) {
  if (width <= 0 || height <= 0) throw Error("target size must be positive");
  if (doc.width <= 0 || doc.height <= 0) throw Error("document size must be positive");
  const double sx = double(width) / doc.width;
  const double sy = double(height) / doc.height;
  VectorDocument out = doc;
  out.width = width;
  out.height = height;
  for (auto& round : out.rounds) {
    for (auto& e : round.elements) {
      for (std::size_t i = 0; i < e.path.size(); ++i) e.path.set(i, {e.path[i].x * sx, e.path[i].y * sy});
    }
    if (round.region) {
      auto& r = *round.region;
      r = {int(std::lround(r.x * sx)), int(std::lround(r.y * sy)), std::max(1, int(std::lround(r.width * sx))),
           std::max(1, int(std::lround(r.height * sy)))};
    }
  }
  return out;
}

}  // namespace vexel
