#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "core/error.hpp"

namespace ts {

struct Raster {
  int64_t width = 0;
  int64_t height = 0;
  std::vector<float> values;

  float at(int64_t y, int64_t x) const {
    return values[static_cast<size_t>(y * width + x)];
  }
};

// Loads a single-channel 8- or 16-bit band and normalizes it to [0, 1].
Raster load_band(const std::filesystem::path& path);

// (green - nir) / (green + nir) per pixel; a 0/0 pixel maps to 0.
Raster compute_ndwi(const Raster& green, const Raster& nir);

// index >= threshold selects water.
std::vector<uint8_t> threshold_mask(const Raster& index, double threshold);

// Writes a {0, 255} single-channel mask next to the given dimensions.
void write_mask(const std::filesystem::path& path, int64_t width, int64_t height,
                const std::vector<uint8_t>& mask01);

}  // namespace ts
