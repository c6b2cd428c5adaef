#include "vexel/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vexel {

Raster crop(const Raster& image, const PixelRect& rect) {
  if (rect.width <= 0 || rect.height <= 0) throw Error("crop rectangle must have positive size");
  const int x0 = std::max(rect.x, 0), x1 = std::min(rect.right(), image.width);
  const int y0 = std::max(rect.y, 0), y1 = std::min(rect.bottom(), image.height);
  if (x0 >= x1 || y0 >= y1) {
    throw Error("crop rectangle (" + std::to_string(rect.x) + "," + std::to_string(rect.y) + " " +
                std::to_string(rect.width) + "x" + std::to_string(rect.height) + ") misses the " +
                std::to_string(image.width) + "x" + std::to_string(image.height) + " image");
  }
  Raster out(rect.width, rect.height);
  for (int y = y0; y < y1; ++y) {
    const double* src = &image.pixels[image.index(x0, y, 0)];
    std::copy(src, src + 3 * (x1 - x0), &out.pixels[out.index(x0 - rect.x, y - rect.y, 0)]);
  }
  return out;
}

void accumulate_crop_gradient(const Raster& grad, const PixelRect& rect, Raster& target) {
  if (grad.width != rect.width || grad.height != rect.height) throw Error("crop gradient does not match its rectangle");
  const int x0 = std::max(rect.x, 0), x1 = std::min(rect.right(), target.width);
  const int y0 = std::max(rect.y, 0), y1 = std::min(rect.bottom(), target.height);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < 3; ++c) target.at(x, y, c) += grad.at(x - rect.x, y - rect.y, c);
}

Raster LinearImageMap::apply(const Raster& input) const {
  if (input.width != in_w_ || input.height != in_h_) throw Error("image size does not match the linear map input");
  Raster out(out_w_, out_h_);
  for (std::size_t o = 0; o + 1 < offsets_.size(); ++o) {
    double acc[3] = {0.0, 0.0, 0.0};
    for (std::uint32_t k = offsets_[o]; k < offsets_[o + 1]; ++k) {
      const Tap& t = taps_[k];
      const double* s = &input.pixels[std::size_t(t.source) * 3];
      acc[0] += t.weight * s[0];
      acc[1] += t.weight * s[1];
      acc[2] += t.weight * s[2];
    }
    out.pixels[o * 3] = acc[0];
    out.pixels[o * 3 + 1] = acc[1];
    out.pixels[o * 3 + 2] = acc[2];
  }
  return out;
}

Raster LinearImageMap::adjoint(const Raster& output_grad) const {
  if (output_grad.width != out_w_ || output_grad.height != out_h_) {
    throw Error("gradient size does not match the linear map output");
  }
  Raster in(in_w_, in_h_);
  for (std::size_t o = 0; o + 1 < offsets_.size(); ++o) {
    const double* g = &output_grad.pixels[o * 3];
    for (std::uint32_t k = offsets_[o]; k < offsets_[o + 1]; ++k) {
      const Tap& t = taps_[k];
      double* d = &in.pixels[std::size_t(t.source) * 3];
      d[0] += t.weight * g[0];
      d[1] += t.weight * g[1];
      d[2] += t.weight * g[2];
    }
  }
  return in;
}

namespace {

struct AxisTap {
  int index;
  double weight;
};

// Normalized triangle-filter taps for each output sample along one axis.
std::vector<std::vector<AxisTap>> axis_taps(int in, int out) {
  const double scale = double(in) / double(out);
  const double support = std::max(1.0, scale);
  std::vector<std::vector<AxisTap>> taps(out);
  for (int o = 0; o < out; ++o) {
    const double center = (o + 0.5) * scale;
    const int lo = std::max(0, int(std::floor(center - support - 0.5)));
    const int hi = std::min(in - 1, int(std::ceil(center + support - 0.5)));
    double total = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const double w = 1.0 - std::abs(i + 0.5 - center) / support;
      if (w > 0.0) {
        taps[o].push_back({i, w});
        total += w;
      }
    }
    if (total <= 0.0) {
      taps[o] = {{std::clamp(int(center), 0, in - 1), 1.0}};
      continue;
    }
    for (auto& t : taps[o]) t.weight /= total;
  }
  return taps;
}

}  // namespace

Resize::Resize(int in_width, int in_height, int out_width, int out_height) {
  if (in_width <= 0 || in_height <= 0 || out_width <= 0 || out_height <= 0) throw Error("resize sizes must be positive");
  in_w_ = in_width;
  in_h_ = in_height;
  out_w_ = out_width;
  out_h_ = out_height;
  const auto tx = axis_taps(in_width, out_width);
  const auto ty = axis_taps(in_height, out_height);
  offsets_.reserve(std::size_t(out_width) * out_height + 1);
  offsets_.push_back(0);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      for (const auto& wy : ty[y])
        for (const auto& wx : tx[x])
          taps_.push_back({std::uint32_t(wy.index * in_width + wx.index), wy.weight * wx.weight});
      offsets_.push_back(std::uint32_t(taps_.size()));
    }
  }
}

Raster resize_to_backend(const Raster& image, int size) {
  if (image.width == size && image.height == size) return image;
  return Resize(image.width, image.height, size, size).apply(image);
}

Quad rect_corners(double width, double height) { return {Point{0, 0}, Point{width, 0}, Point{width, height}, Point{0, height}}; }

bool is_valid_quad(const Quad& q) {
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const Point a = q[i], b = q[(i + 1) % 4], c = q[(i + 2) % 4];
    const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
    if (!std::isfinite(cross) || cross == 0.0) return false;
    const int s = cross > 0.0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

std::array<double, 9> rect_to_quad_homography(double width, double height, const Quad& quad) {
  if (!is_valid_quad(quad)) throw Error("perspective quad is degenerate or not convex");
  const Quad src = rect_corners(width, height);
  // Solve the 8x8 system for h0..h7 with Gaussian elimination (partial pivoting).
  double m[8][9] = {};
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x, y = src[i].y, u = quad[i].x, v = quad[i].y;
    double* r0 = m[2 * i];
    double* r1 = m[2 * i + 1];
    r0[0] = x, r0[1] = y, r0[2] = 1, r0[6] = -u * x, r0[7] = -u * y, r0[8] = u;
    r1[3] = x, r1[4] = y, r1[5] = 1, r1[6] = -v * x, r1[7] = -v * y, r1[8] = v;
  }
  for (int col = 0; col < 8; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 8; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    if (std::abs(m[pivot][col]) < 1e-12) throw Error("perspective quad produces a singular homography");
    if (pivot != col)
      for (int k = 0; k < 9; ++k) std::swap(m[col][k], m[pivot][k]);
    for (int r = 0; r < 8; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      if (f == 0.0) continue;
      for (int k = col; k < 9; ++k) m[r][k] -= f * m[col][k];
    }
  }
  std::array<double, 9> h{};
  for (int i = 0; i < 8; ++i) h[i] = m[i][8] / m[i][i];
  h[8] = 1.0;
  return h;
}

PerspectiveWarp::PerspectiveWarp(int width, int height, const Quad& quad) {
  if (width <= 0 || height <= 0) throw Error("warp size must be positive");
  in_w_ = out_w_ = width;
  in_h_ = out_h_ = height;
  offsets_.reserve(std::size_t(width) * height + 1);
  offsets_.push_back(0);
  if (quad == rect_corners(width, height)) {
    for (int i = 0; i < width * height; ++i) {
      taps_.push_back({std::uint32_t(i), 1.0});
      offsets_.push_back(std::uint32_t(taps_.size()));
    }
    return;
  }
  const auto h = rect_to_quad_homography(width, height, quad);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double w = h[6] * px + h[7] * py + h[8];
      const double sx = (h[0] * px + h[1] * py + h[2]) / w - 0.5;
      const double sy = (h[3] * px + h[4] * py + h[5]) / w - 0.5;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const int x0 = int(fx), y0 = int(fy);
      const double weights[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int k = 0; k < 4; ++k) {
        if (weights[k] == 0.0 || xs[k] < 0 || ys[k] < 0 || xs[k] >= width || ys[k] >= height) continue;
        taps_.push_back({std::uint32_t(ys[k] * width + xs[k]), weights[k]});
      }
      offsets_.push_back(std::uint32_t(taps_.size()));
    }
  }
}

Raster perspective_warp(const Raster& image, const Quad& quad) {
  return PerspectiveWarp(image.width, image.height, quad).apply(image);
}

}  // namespace vexel
