#pragma once

#include <string>

#include "vexel/raster.hpp"

namespace vexel {

/// Reads an 8-bit grayscale, RGB or RGBA PNG (palette images are expanded).
/// Alpha is composited over white. Throws Error naming the file on failure;
/// 16-bit images are rejected as unsupported.
Raster read_png(const std::string& path);

/// Writes an 8-bit RGB PNG; values are clamped to [0, 1] and rounded half up.
void write_png(const std::string& path, const Raster& image);

}  // namespace vexel
