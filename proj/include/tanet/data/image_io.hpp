#pragma once

#include <filesystem>

#include "tanet/core/tensor.hpp"
#include "tanet/data/image.hpp"

namespace tanet {

// Reads an 8-bit PNG or JPEG file (decided by magic bytes, not extension)
// into [0,1] RGB. Grayscale sources are replicated across channels.
Image read_image(const std::filesystem::path& file);

void write_png(const std::filesystem::path& file, const Image& im);

void write_jpeg(const std::filesystem::path& file, const Image& im, int quality = 92);

// Writes a single-channel map as 8-bit grayscale PNG, clamping to [0,1].
// Accepts shape (h,w) or (1,h,w).
void write_png_gray(const std::filesystem::path& file, const Tensor& map);

} // namespace tanet
