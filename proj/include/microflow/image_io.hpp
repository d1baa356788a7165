#pragma once

#include <microflow/image.hpp>

#include <filesystem>

namespace microflow {

/// Reads PNG (any bit depth/color type), binary PGM (P5) or PPM (P6) as 8-bit RGB.
RgbImage read_image(const std::filesystem::path& path);

/// 8-bit RGB PNG.
void write_png(const std::filesystem::path& path, const RgbImage& img);

/// 8-bit grayscale, quantized by round(v*255). Format by extension: .pgm writes P5, otherwise PNG.
void write_gray(const std::filesystem::path& path, const ImageD& intensity);

} // namespace microflow
