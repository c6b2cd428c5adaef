#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vexel/document.hpp"
#include "vexel/raster.hpp"

namespace vexel {

/// Copy of `rect` from `image`; parts of rect outside the image are zero.
/// Throws Error when rect does not intersect the image.
Raster crop(const Raster& image, const PixelRect& rect);

/// Adds the gradient of a crop (grad has rect's size) back into `target`,
/// which has the source image's size. Out-of-image pixels are dropped.
void accumulate_crop_gradient(const Raster& grad, const PixelRect& rect, Raster& target);

/// Linear image-to-image map stored as sparse taps per output pixel, with
/// its exact transpose.
class LinearImageMap {
 public:
  struct Tap {
    std::uint32_t source;  // source pixel index (x + y * width)
    double weight;
  };

  int in_width() const { return in_w_; }
  int in_height() const { return in_h_; }
  int out_width() const { return out_w_; }
  int out_height() const { return out_h_; }

  Raster apply(const Raster& input) const;
  /// Transpose: maps a gradient on the output back onto the input.
  Raster adjoint(const Raster& output_grad) const;

 protected:
  int in_w_ = 0, in_h_ = 0, out_w_ = 0, out_h_ = 0;
  std::vector<std::uint32_t> offsets_;  // per output pixel, CSR into taps_
  std::vector<Tap> taps_;
};

/// Separable bilinear resize. When shrinking, the triangle filter is
/// widened by the scale factor so every source pixel contributes (the
/// footprint mean for an integer factor of 2); weights are normalized, so
/// constant images stay constant. Same size is the identity.
class Resize : public LinearImageMap {
 public:
  Resize(int in_width, int in_height, int out_width, int out_height);
};

Raster resize_to_backend(const Raster& image, int size);

/// Quadrilateral corners in order: top-left, top-right, bottom-right,
/// bottom-left.
using Quad = std::array<Point, 4>;

Quad rect_corners(double width, double height);

/// True for a strictly convex quad with consistent winding.
bool is_valid_quad(const Quad& quad);

/// Homography that maps (0,0),(w,0),(w,h),(0,h) onto `quad`, as a row-major
/// 3x3 matrix with the last entry 1. Throws Error for degenerate quads.
std::array<double, 9> rect_to_quad_homography(double width, double height, const Quad& quad);

/// Output pixel centers mapped through the rect-to-quad homography and
/// sampled bilinearly from the input; reads outside the input are zero.
/// The quad equal to the image corners is the exact identity.
class PerspectiveWarp : public LinearImageMap {
 public:
  PerspectiveWarp(int width, int height, const Quad& quad);
};

Raster perspective_warp(const Raster& image, const Quad& quad);

}  // namespace vexel
