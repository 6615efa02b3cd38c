#pragma once

#include <string>

#include "cthunet/image.hpp"

namespace cthunet {

// Reads an 8- or 16-bit grayscale PNG as raw digital numbers. Color inputs
// are converted to grayscale.
ImageF read_png_gray(const std::string& path);

// value_scale maps [0,1] floats to 8-bit output (rounded, clipped).
void write_png_gray8(const std::string& path, const ImageF& img);

// Binary mask written as {0, 255}.
void write_png_mask(const std::string& path, const ImageU8& mask);

} // namespace cthunet
