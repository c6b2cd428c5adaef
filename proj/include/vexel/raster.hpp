#pragma once

#include <cstddef>
#include <vector>

#include "vexel/common.hpp"

namespace vexel {

/// Row-major H x W x 3 image. Values are in [0, 1] for rendered or loaded
/// images; gradient rasters reuse the type with unbounded values.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Raster() = default;
  Raster(int w, int h, double fill = 0.0);

  std::size_t size() const { return pixels.size(); }
  std::size_t index(int x, int y, int c) const { return (std::size_t(y) * width + x) * 3 + c; }
  double& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
  double at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
  bool same_shape(const Raster& o) const { return width == o.width && height == o.height; }
  bool operator==(const Raster&) const = default;
};

/// Mean squared error over pixels and channels; throws on shape mismatch.
double mean_squared_error(const Raster& a, const Raster& b);

/// 10 log10(1 / MSE) for unit-range images (infinite for identical inputs).
double psnr(const Raster& a, const Raster& b);

}  // namespace vexel
