#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "core/error.hpp"

namespace ts {

// Decoded raster, interleaved row-major samples. bit_depth is 8 or 16;
// samples always live in uint16_t regardless of depth.
struct RawImage {
  int64_t width = 0;
  int64_t height = 0;
  int channels = 1;  // 1 or 3
  int bit_depth = 8;
  std::vector<uint16_t> pixels;

  uint16_t sample(int64_t y, int64_t x, int c) const {
    return pixels[static_cast<size_t>((y * width + x) * channels + c)];
  }
};

// Sniffs the magic bytes and decodes PNG, binary PNM (P5/P6) or, when built
// with JPEG support, baseline JPEG. Palette images expand to RGB and alpha is
// stripped. PNM maxval must be 255 or 65535.
RawImage load_image(const std::filesystem::path& path);

// Encodes by extension: .png, .pgm (1 channel) or .ppm (3 channels).
void save_image(const RawImage& img, const std::filesystem::path& path);

bool jpeg_supported();

// Converts a 3-channel image to luma with integer rounding; passes gray through.
RawImage to_gray(const RawImage& img);

RawImage resize_nearest(const RawImage& img, int64_t out_h, int64_t out_w);

}  // namespace ts
