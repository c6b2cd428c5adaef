#include "vexel/raster.hpp"

#include <limits>
#include <string>

namespace vexel {

Raster::Raster(int w, int h, double fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw Error("raster size must be non-negative");
  pixels.assign(std::size_t(w) * std::size_t(h) * 3, fill);
}

double mean_squared_error(const Raster& a, const Raster& b) {
  if (!a.same_shape(b)) {
    throw Error("raster size mismatch: " + std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                std::to_string(b.width) + "x" + std::to_string(b.height));
  }
  if (a.pixels.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    sum += d * d;
  }
  return sum / double(a.pixels.size());
}

double psnr(const Raster& a, const Raster& b) {
  const double mse = mean_squared_error(a, b);
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace vexel
