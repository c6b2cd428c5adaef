#include "vexel/vectorizer.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <numeric>
#include <string>

namespace vexel {

namespace {

using Color = std::array<double, 3>;

double luminance(const Color& c) { return 0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]; }

bool luminance_less(const Color& a, const Color& b) {
  const double la = luminance(a), lb = luminance(b);
  if (la != lb) return la < lb;
  return a < b;
}

double dist2(const Color& a, const Color& b) {
  const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
  return dr * dr + dg * dg + db * db;
}

int nearest(const std::vector<Color>& centers, const Color& c) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double d = dist2(centers[k], c);
    if (d < best_d) {
      best_d = d;
      best = int(k);
    }
  }
  return best;
}

// Weighted k-means over distinct colors; equivalent to running on pixels.
std::vector<Color> kmeans(const std::vector<Color>& colors, const std::vector<double>& weights, int k,
                          std::uint64_t seed) {
  Rng rng(seed);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);

  auto pick = [&](const std::vector<double>& w, double sum) {
    double target = rng.uniform() * sum;
    for (std::size_t i = 0; i < w.size(); ++i) {
      target -= w[i];
      if (target < 0.0) return i;
    }
    // Rounding fallback: last positive weight.
    for (std::size_t i = w.size(); i-- > 0;)
      if (w[i] > 0.0) return i;
    return std::size_t(0);
  };

  std::vector<Color> centers;
  centers.push_back(colors[pick(weights, total)]);
  std::vector<double> d2(colors.size());
  while (int(centers.size()) < k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < colors.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, dist2(c, colors[i]));
      d2[i] = best * weights[i];
      sum += d2[i];
    }
    if (sum <= 0.0) break;
    centers.push_back(colors[pick(d2, sum)]);
  }

  std::vector<Color> sums(centers.size());
  std::vector<double> mass(centers.size());
  for (int iter = 0; iter < 20; ++iter) {
    std::fill(sums.begin(), sums.end(), Color{0, 0, 0});
    std::fill(mass.begin(), mass.end(), 0.0);
    for (std::size_t i = 0; i < colors.size(); ++i) {
      const int c = nearest(centers, colors[i]);
      for (int ch = 0; ch < 3; ++ch) sums[c][ch] += weights[i] * colors[i][ch];
      mass[c] += weights[i];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (mass[c] <= 0.0) continue;  // empty cluster keeps its centroid
      const Color next{sums[c][0] / mass[c], sums[c][1] / mass[c], sums[c][2] / mass[c]};
      shift = std::max(shift, std::sqrt(dist2(next, centers[c])));
      centers[c] = next;
    }
    if (shift < 1e-4) break;
  }
  return centers;
}

Raster crop_copy(const Raster& image, const PixelRect& r) {
  Raster out(r.width, r.height);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(r.x + x, r.y + y, c);
  return out;
}

PixelRect round_region(const RoundSpec& spec, int width, int height) {
  return spec.region.value_or(PixelRect{0, 0, width, height});
}

double point_segment_distance(Point p, Point a, Point b) {
  const double ex = b.x - a.x, ey = b.y - a.y;
  const double len2 = ex * ex + ey * ey;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * ex + (p.y - a.y) * ey) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * ex), p.y - (a.y + t * ey));
}

void douglas_peucker(const Polygon& pts, std::size_t first, std::size_t last, double tol, std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double worst = -1.0;
  std::size_t index = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last % pts.size()]);
    if (d > worst) {
      worst = d;
      index = i;
    }
  }
  if (worst > tol) {
    keep[index] = true;
    douglas_peucker(pts, first, index, tol, keep);
    douglas_peucker(pts, index, last, tol, keep);
  }
}

// ---- cubic fitting ------------------------------------------------------

struct Vec {
  double x, y;
};
Vec operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
Point operator+(Point a, Vec v) { return {a.x + v.x, a.y + v.y}; }
Vec operator*(Vec v, double s) { return {v.x * s, v.y * s}; }
Vec operator-(Vec v) { return {-v.x, -v.y}; }
double dot(Vec a, Vec b) { return a.x * b.x + a.y * b.y; }
double norm(Vec v) { return std::hypot(v.x, v.y); }
Vec normalized(Vec v) {
  const double n = norm(v);
  return n > 0.0 ? Vec{v.x / n, v.y / n} : Vec{0.0, 0.0};
}

using Bezier = std::array<Point, 4>;

Point eval(const Bezier& b, double t) {
  const double s = 1.0 - t;
  const double w0 = s * s * s, w1 = 3 * t * s * s, w2 = 3 * t * t * s, w3 = t * t * t;
  return {w0 * b[0].x + w1 * b[1].x + w2 * b[2].x + w3 * b[3].x,
          w0 * b[0].y + w1 * b[1].y + w2 * b[2].y + w3 * b[3].y};
}

Vec eval_d1(const Bezier& b, double t) {
  const double s = 1.0 - t;
  const Vec q0 = b[1] - b[0], q1 = b[2] - b[1], q2 = b[3] - b[2];
  return {3 * (s * s * q0.x + 2 * s * t * q1.x + t * t * q2.x), 3 * (s * s * q0.y + 2 * s * t * q1.y + t * t * q2.y)};
}

Vec eval_d2(const Bezier& b, double t) {
  const double s = 1.0 - t;
  const Vec r0 = {b[2].x - 2 * b[1].x + b[0].x, b[2].y - 2 * b[1].y + b[0].y};
  const Vec r1 = {b[3].x - 2 * b[2].x + b[1].x, b[3].y - 2 * b[2].y + b[1].y};
  return {6 * (s * r0.x + t * r1.x), 6 * (s * r0.y + t * r1.y)};
}

Bezier straight(Point a, Point b) {
  const Vec d = b - a;
  return {a, a + d * (1.0 / 3.0), a + d * (2.0 / 3.0), b};
}

class CurveFitter {
 public:
  CurveFitter(const std::vector<Point>& pts, double tol) : pts_(pts), tol_(tol) {}

  void fit(std::size_t first, std::size_t last, Vec t1, Vec t2, std::vector<Bezier>& out) const {
    const std::size_t count = last - first + 1;
    if (count == 2) {
      out.push_back(heuristic(first, last, t1, t2));
      return;
    }
    std::vector<double> u = chord_parameters(first, last);
    Bezier bez = generate(first, last, u, t1, t2);
    auto [error, split] = max_error(first, last, bez, u);
    if (error < tol_) {
      out.push_back(bez);
      return;
    }
    if (error < 4.0 * tol_) {
      for (int i = 0; i < 8; ++i) {
        u = reparameterize(first, last, u, bez);
        bez = generate(first, last, u, t1, t2);
        std::tie(error, split) = max_error(first, last, bez, u);
        if (error < tol_) {
          out.push_back(bez);
          return;
        }
      }
    }
    Vec center = normalized(pts_[split - 1] - pts_[split + 1]);
    if (norm(center) == 0.0) center = normalized(Vec{-(pts_[split + 1] - pts_[split]).y, (pts_[split + 1] - pts_[split]).x});
    fit(first, split, t1, center, out);
    fit(split, last, -center, t2, out);
  }

 private:
  Bezier heuristic(std::size_t first, std::size_t last, Vec t1, Vec t2) const {
    const double d = norm(pts_[last] - pts_[first]) / 3.0;
    if (norm(t1) == 0.0 || norm(t2) == 0.0) return straight(pts_[first], pts_[last]);
    return {pts_[first], pts_[first] + t1 * d, pts_[last] + t2 * d, pts_[last]};
  }

  std::vector<double> chord_parameters(std::size_t first, std::size_t last) const {
    std::vector<double> u(last - first + 1, 0.0);
    for (std::size_t i = first + 1; i <= last; ++i) u[i - first] = u[i - first - 1] + norm(pts_[i] - pts_[i - 1]);
    const double total = u.back();
    for (auto& v : u) v = total > 0.0 ? v / total : 0.0;
    return u;
  }

  Bezier generate(std::size_t first, std::size_t last, const std::vector<double>& u, Vec t1, Vec t2) const {
    const Point p0 = pts_[first], p3 = pts_[last];
    double c00 = 0, c01 = 0, c11 = 0, x0 = 0, x1 = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double t = u[i], s = 1.0 - t;
      const double b0 = s * s * s, b1 = 3 * t * s * s, b2 = 3 * t * t * s, b3 = t * t * t;
      const Vec a1 = t1 * b1, a2 = t2 * b2;
      c00 += dot(a1, a1);
      c01 += dot(a1, a2);
      c11 += dot(a2, a2);
      const Point base{p0.x * (b0 + b1) + p3.x * (b2 + b3), p0.y * (b0 + b1) + p3.y * (b2 + b3)};
      const Vec residual = pts_[first + i] - base;
      x0 += dot(a1, residual);
      x1 += dot(a2, residual);
    }
    const double det = c00 * c11 - c01 * c01;
    double alpha_l = 0.0, alpha_r = 0.0;
    if (std::abs(det) > 1e-12) {
      alpha_l = (x0 * c11 - x1 * c01) / det;
      alpha_r = (c00 * x1 - c01 * x0) / det;
    }
    const double seg = norm(p3 - p0);
    const double eps = 1e-6 * seg;
    // Handles longer than the chord mean the least-squares solve ran away
    // (loops between samples); the heuristic fit forces a split instead.
    if (alpha_l < eps || alpha_r < eps || alpha_l > seg || alpha_r > seg || norm(t1) == 0.0 || norm(t2) == 0.0) {
      if (norm(t1) == 0.0 || norm(t2) == 0.0) return straight(p0, p3);
      return {p0, p0 + t1 * (seg / 3.0), p3 + t2 * (seg / 3.0), p3};
    }
    return {p0, p0 + t1 * alpha_l, p3 + t2 * alpha_r, p3};
  }

  std::pair<double, std::size_t> max_error(std::size_t first, std::size_t last, const Bezier& bez,
                                           const std::vector<double>& u) const {
    double worst = 0.0;
    std::size_t split = first + (last - first) / 2;
    for (std::size_t i = first + 1; i < last; ++i) {
      const Point q = eval(bez, u[i - first]);
      const double d = norm(pts_[i] - q);
      if (d >= worst) {
        worst = d;
        split = i;
      }
    }
    return {worst, split};
  }

  std::vector<double> reparameterize(std::size_t first, std::size_t last, const std::vector<double>& u,
                                     const Bezier& bez) const {
    std::vector<double> out(u);
    for (std::size_t i = first; i <= last; ++i) {
      const double t = u[i - first];
      const Vec diff = eval(bez, t) - pts_[i];
      const Vec d1 = eval_d1(bez, t), d2 = eval_d2(bez, t);
      const double num = dot(diff, d1);
      const double den = dot(d1, d1) + dot(diff, d2);
      if (std::abs(den) > 1e-12) out[i - first] = std::clamp(t - num / den, 0.0, 1.0);
    }
    return out;
  }

  const std::vector<Point>& pts_;
  double tol_;
};

double turn_cosine(Point prev, Point cur, Point next) {
  const Vec a = normalized(cur - prev), b = normalized(next - cur);
  return dot(a, b);
}

}  // namespace

VectorizeConfig VectorizeConfig::defaults() {
  VectorizeConfig c;
  c.rounds = {RoundSpec{}, RoundSpec{}};
  c.rounds[0].n_colors = 10;
  c.rounds[1].n_colors = 30;
  return c;
}

void validate(const VectorizeConfig& config, int width, int height) {
  if (config.rounds.empty()) throw Error("vectorize config needs at least one round");
  for (std::size_t i = 0; i < config.rounds.size(); ++i) {
    const auto& r = config.rounds[i];
    const std::string where = "round " + std::to_string(i + 1);
    if (r.n_colors < 1) throw Error(where + ": n_colors must be at least 1");
    if (!(r.simplify_tolerance > 0.0) || !(r.fit_tolerance > 0.0)) throw Error(where + ": tolerances must be positive");
    if (r.min_area < 0.0) throw Error(where + ": min_area must be non-negative");
    if (r.region) {
      const auto& g = *r.region;
      if (g.width <= 0 || g.height <= 0 || g.x < 0 || g.y < 0 || g.right() > width || g.bottom() > height) {
        throw Error(where + ": region lies outside the " + std::to_string(width) + "x" + std::to_string(height) +
                    " canvas");
      }
    }
  }
  const auto& first = config.rounds.front().region;
  if (first && !(first->x == 0 && first->y == 0 && first->width == width && first->height == height)) {
    throw Error("round 1 must cover the full canvas");
  }
}

Quantization quantize_colors(const Raster& image, int n_colors, std::uint64_t seed) {
  if (n_colors < 1) throw Error("n_colors must be at least 1");
  Quantization q;
  q.labels.width = image.width;
  q.labels.height = image.height;
  q.labels.labels.assign(std::size_t(image.width) * image.height, 0);
  if (image.pixels.empty()) return q;

  std::map<Color, double> histogram;
  for (std::size_t i = 0; i < image.pixels.size(); i += 3)
    histogram[Color{image.pixels[i], image.pixels[i + 1], image.pixels[i + 2]}] += 1.0;

  std::vector<Color> centers;
  if (histogram.size() <= std::size_t(n_colors)) {
    for (const auto& [c, n] : histogram) centers.push_back(c);
  } else {
    std::vector<Color> colors;
    std::vector<double> weights;
    for (const auto& [c, n] : histogram) {
      colors.push_back(c);
      weights.push_back(n);
    }
    centers = kmeans(colors, weights, n_colors, seed);
  }
  std::sort(centers.begin(), centers.end(), luminance_less);

  for (const auto& c : centers) q.palette.push_back({c[0], c[1], c[2]});
  std::map<Color, int> assignment;
  for (const auto& [c, n] : histogram) assignment[c] = nearest(centers, c);
  for (std::size_t i = 0, p = 0; i < image.pixels.size(); i += 3, ++p)
    q.labels.labels[p] = assignment[Color{image.pixels[i], image.pixels[i + 1], image.pixels[i + 2]}];
  return q;
}

std::vector<Contour> trace_components(const LabelMap& labels, int color_index) {
  const int w = labels.width, h = labels.height;
  auto inside = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && labels.at(x, y) == color_index; };

  std::vector<Contour> out;
  std::vector<char> visited(std::size_t(w) * h, 0);
  std::vector<std::pair<int, int>> stack;
  // Directions: right, down, left, up (y grows downwards).
  const int dx[4] = {1, 0, -1, 0};
  const int dy[4] = {0, 1, 0, -1};
  // Pixel ahead-right / ahead-left of vertex (vx, vy) for each direction,
  // as offsets from the vertex.
  const int ar[4][2] = {{0, 0}, {-1, 0}, {-1, -1}, {0, -1}};
  const int al[4][2] = {{0, -1}, {0, 0}, {-1, 0}, {-1, -1}};

  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      if (visited[std::size_t(sy) * w + sx] || !inside(sx, sy)) continue;
      std::size_t count = 0;
      stack.assign(1, {sx, sy});
      visited[std::size_t(sy) * w + sx] = 1;
      while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        ++count;
        for (int d = 0; d < 4; ++d) {
          const int nx = x + dx[d], ny = y + dy[d];
          if (inside(nx, ny) && !visited[std::size_t(ny) * w + nx]) {
            visited[std::size_t(ny) * w + nx] = 1;
            stack.push_back({nx, ny});
          }
        }
      }

      // Crack-following walk with the component on the right-hand side,
      // starting on the top edge of its first pixel.
      Polygon poly;
      int vx = sx, vy = sy, dir = 0;
      do {
        vx += dx[dir];
        vy += dy[dir];
        const bool right_in = inside(vx + ar[dir][0], vy + ar[dir][1]);
        const bool left_in = inside(vx + al[dir][0], vy + al[dir][1]);
        int next;
        if (!right_in)
          next = (dir + 1) % 4;
        else if (!left_in)
          next = dir;
        else
          next = (dir + 3) % 4;
        if (next != dir) poly.push_back({double(vx), double(vy)});
        dir = next;
      } while (!(vx == sx && vy == sy && dir == 0));
      // The start vertex is a corner; rotate it to the front.
      std::rotate(poly.begin(), poly.end() - 1, poly.end());
      out.push_back({std::move(poly), count});
    }
  }
  return out;
}

std::vector<Polygon> extract_contours(const LabelMap& labels, int color_index) {
  std::vector<Polygon> out;
  for (auto& c : trace_components(labels, color_index)) out.push_back(std::move(c.polygon));
  return out;
}

double signed_area(const Polygon& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i], b = poly[(i + 1) % poly.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return s;
}

std::optional<Polygon> simplify_polygon(const Polygon& poly, double tolerance) {
  if (poly.size() < 3) return std::nullopt;
  if (tolerance <= 0.0) return poly;

  // Split the ring at vertex 0 and the vertex farthest from it.
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const double d = std::hypot(poly[i].x - poly[0].x, poly[i].y - poly[0].y);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  if (far_d <= 0.0) return std::nullopt;
  std::vector<bool> keep(poly.size(), false);
  keep[0] = keep[far] = true;
  douglas_peucker(poly, 0, far, tolerance, keep);
  douglas_peucker(poly, far, poly.size(), tolerance, keep);

  Polygon out;
  for (std::size_t i = 0; i < poly.size(); ++i)
    if (keep[i]) out.push_back(poly[i]);
  if (out.size() < 3) {
    // Keep the vertex farthest from the chord so the ring stays a polygon.
    std::size_t best = 0;
    double best_d = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      if (keep[i]) continue;
      const double d = point_segment_distance(poly[i], poly[0], poly[far]);
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best_d <= 0.0) return std::nullopt;
    keep[best] = true;
    out.clear();
    for (std::size_t i = 0; i < poly.size(); ++i)
      if (keep[i]) out.push_back(poly[i]);
  }
  return out;
}

CubicPath fit_beziers(const Polygon& input, double fit_tolerance) {
  // Drop consecutive duplicates.
  Polygon poly;
  for (const auto& p : input)
    if (poly.empty() || !(poly.back() == p)) poly.push_back(p);
  while (poly.size() > 1 && poly.front() == poly.back()) poly.pop_back();
  if (poly.size() < 3) throw Error("fit_beziers needs at least 3 distinct vertices");

  const std::size_t n = poly.size();
  constexpr double kCornerCosine = 0.5;  // turns sharper than 60 degrees
  std::vector<std::size_t> corners;
  for (std::size_t i = 0; i < n; ++i) {
    if (turn_cosine(poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]) < kCornerCosine) corners.push_back(i);
  }

  std::vector<Bezier> segments;
  std::vector<Point> chain;
  auto fit_chain = [&](Vec t1, Vec t2) {
    CurveFitter fitter(chain, fit_tolerance);
    fitter.fit(0, chain.size() - 1, t1, t2, segments);
  };

  if (corners.empty()) {
    chain.assign(poly.begin(), poly.end());
    chain.push_back(poly[0]);
    const Vec tangent = normalized(poly[1] - poly[n - 1]);
    fit_chain(tangent, -tangent);
  } else {
    for (std::size_t c = 0; c < corners.size(); ++c) {
      const std::size_t start = corners[c];
      const std::size_t stop = corners[(c + 1) % corners.size()];
      chain.clear();
      std::size_t i = start;
      do {
        chain.push_back(poly[i]);
        i = (i + 1) % n;
      } while (i != stop);
      chain.push_back(poly[stop]);
      fit_chain(normalized(chain[1] - chain[0]), normalized(chain[chain.size() - 2] - chain.back()));
    }
  }

  std::vector<Point> points;
  points.reserve(segments.size() * 3);
  for (const auto& s : segments) {
    points.push_back(s[0]);
    points.push_back(s[1]);
    points.push_back(s[2]);
  }
  return CubicPath(std::move(points));
}

double max_vertex_deviation(const Polygon& poly, const CubicPath& path) {
  constexpr int kSamples = 256;
  std::vector<Point> dense;
  for (std::size_t s = 0; s < path.segment_count(); ++s) {
    const auto seg = path.segment(s);
    const Bezier b{seg[0], seg[1], seg[2], seg[3]};
    for (int j = 0; j < kSamples; ++j) dense.push_back(eval(b, double(j) / kSamples));
  }
  double worst = 0.0;
  for (const auto& p : poly) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dense.size(); ++i)
      best = std::min(best, point_segment_distance(p, dense[i], dense[(i + 1) % dense.size()]));
    worst = std::max(worst, best);
  }
  return worst;
}

namespace {

bool inside(const Point& p, const Rect& r) { return p.x >= r.x && p.x <= r.right() && p.y >= r.y && p.y <= r.bottom(); }

// Appends the handles and end point of seg, halving it (de Casteljau) while
// any control point leaves r, at most `depth` times.
void append_contained(const std::array<Point, 4>& seg, const Rect& r, int depth, std::vector<Point>& out) {
  const bool ok = inside(seg[1], r) && inside(seg[2], r) && inside(seg[3], r);
  if (ok || depth == 0) {
    out.insert(out.end(), seg.begin() + 1, seg.end());
    return;
  }
  auto mid = [](Point a, Point b) { return Point{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; };
  const Point p01 = mid(seg[0], seg[1]), p12 = mid(seg[1], seg[2]), p23 = mid(seg[2], seg[3]);
  const Point a = mid(p01, p12), b = mid(p12, p23), m = mid(a, b);
  append_contained({seg[0], p01, a, m}, r, depth - 1, out);
  append_contained({m, b, p23, seg[3]}, r, depth - 1, out);
}

}  // namespace

// Moves a path fitted in region-local coordinates into canvas coordinates
// with every control point inside the region. Segments that stray are
// subdivided first so the final clamp only nudges points near the curve.
CubicPath contain_in_region(const CubicPath& local, const PixelRect& region) {
  const Rect r = to_rect(region);
  std::vector<Point> shifted(local.points());
  for (auto& p : shifted) p = {p.x + region.x, p.y + region.y};
  const CubicPath path(shifted);
  std::vector<Point> out{path[0]};
  for (std::size_t s = 0; s < path.segment_count(); ++s) append_contained(path.segment(s), r, 4, out);
  out.pop_back();  // closing point repeats the first
  for (auto& p : out) p = {std::clamp(p.x, r.x, r.right()), std::clamp(p.y, r.y, r.bottom())};
  return CubicPath(std::move(out));
}

Round vectorize_round(const Raster& image, const RoundSpec& spec, std::uint64_t seed, ElementId first_id) {
  const PixelRect region = round_region(spec, image.width, image.height);
  if (region.width <= 0 || region.height <= 0 || region.x < 0 || region.y < 0 || region.right() > image.width ||
      region.bottom() > image.height) {
    throw Error("round region lies outside the image");
  }
  const Raster sub = crop_copy(image, region);
  const Quantization q = quantize_colors(sub, spec.n_colors, seed);

  struct Candidate {
    PathElement element;
    double area;
  };
  std::vector<std::vector<Candidate>> per_color(q.palette.size());
  parallel_for(int(q.palette.size()), [&](int c) {
    for (auto& contour : trace_components(q.labels, c)) {
      if (double(contour.pixel_count) < spec.min_area) continue;
      const double area = std::abs(signed_area(contour.polygon)) * 0.5;
      auto simplified = simplify_polygon(contour.polygon, spec.simplify_tolerance);
      if (!simplified) continue;
      const CubicPath path = contain_in_region(fit_beziers(*simplified, spec.fit_tolerance), region);
      const Rgb& color = q.palette[c];
      per_color[c].push_back({PathElement{std::move(path), Rgba{color.r, color.g, color.b, 1.0}, 0}, area});
    }
  });

  std::vector<Candidate> all;
  for (auto& list : per_color)
    for (auto& c : list) all.push_back(std::move(c));
  std::stable_sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) { return a.area > b.area; });

  Round round;
  round.precision = spec.n_colors;
  round.region = spec.region;
  ElementId id = first_id;
  for (auto& c : all) {
    c.element.id = id++;
    round.elements.push_back(std::move(c.element));
  }
  return round;
}

Rgb mean_color(const Raster& image) {
  Rgb m;
  const std::size_t n = image.pixels.size() / 3;
  if (n == 0) return m;
  for (std::size_t i = 0; i < image.pixels.size(); i += 3) {
    m.r += image.pixels[i];
    m.g += image.pixels[i + 1];
    m.b += image.pixels[i + 2];
  }
  m.r /= double(n);
  m.g /= double(n);
  m.b /= double(n);
  return m;
}

VectorDocument vectorize(const Raster& image, const VectorizeConfig& config) {
  if (image.width <= 0 || image.height <= 0) throw Error("cannot vectorize an empty image");
  validate(config, image.width, image.height);
  VectorDocument doc;
  doc.width = image.width;
  doc.height = image.height;
  ElementId next = 0;
  for (std::size_t i = 0; i < config.rounds.size(); ++i) {
    if (i == 0) {
      // Canvas-sized background in the mean color, below everything else.
      const Rgb bg = mean_color(image);
      Round round = vectorize_round(image, config.rounds[i], config.seed + i, next + 1);
      round.elements.insert(round.elements.begin(),
                            PathElement{CubicPath::rectangle({0.0, 0.0, double(image.width), double(image.height)}),
                                        Rgba{bg.r, bg.g, bg.b, 1.0}, next});
      doc.rounds.push_back(std::move(round));
    } else {
      doc.rounds.push_back(vectorize_round(image, config.rounds[i], config.seed + i, next));
    }
    next += ElementId(doc.rounds.back().elements.size());
  }
  return doc;
}

}  // namespace vexel
