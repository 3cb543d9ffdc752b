#pragma once

#include <cstdint>
#include <string>

#include "core/tensor.hpp"

namespace grl {

// Loads an image as a [3, height, width] RGB tensor with values in [0, 1],
// resizing with bilinear interpolation when the file dimensions differ.
Tensor load_image(const std::string& path, int64_t height, int64_t width);

// Loads an image at its native size.
Tensor load_image_native(const std::string& path);

// Writes a [3, H, W] RGB tensor with values in [0, 1] as a PNG. Values are
// clamped and rounded to 8 bits.
void save_image(const std::string& path, const Tensor& image);

// Writes a [H, W] or [1, H, W] tensor with values in [0, 1] as a grayscale PNG.
void save_image_gray(const std::string& path, const Tensor& image);

// Writes a [H, W] or [1, H, W] tensor with values in [0, 1] as a pseudocolor
// PNG using the JET colormap.
void save_image_pseudocolor(const std::string& path, const Tensor& image);

// Bilinearly resizes a [H, W] or [1, H, W] single-channel tensor.
Tensor resize_map(const Tensor& map, int64_t height, int64_t width);

}  // namespace grl
