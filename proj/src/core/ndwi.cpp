#include "core/ndwi.hpp"

#include "core/image_io.hpp"

namespace ts {

Raster load_band(const std::filesystem::path& path) {
  RawImage img = load_image(path);
  if (img.channels != 1)
    fail(ErrorKind::format, "band must be single-channel, got " +
                                std::to_string(img.channels) + " channels: " + path.string());
  const double denom = img.bit_depth == 16 ? 65535.0 : 255.0;
  Raster r;
  r.width = img.width;
  r.height = img.height;
  r.values.reserve(img.pixels.size());
  for (uint16_t v : img.pixels)
    r.values.push_back(static_cast<float>(static_cast<double>(v) / denom));
  return r;
}

Raster compute_ndwi(const Raster& green, const Raster& nir) {
  if (green.width != nir.width || green.height != nir.height)
    fail(ErrorKind::shape, "band extents differ: " + std::to_string(green.width) + "x" +
                               std::to_string(green.height) + " vs " +
                               std::to_string(nir.width) + "x" + std::to_string(nir.height));
  Raster out;
  out.width = green.width;
  out.height = green.height;
  out.values.reserve(green.values.size());
  for (size_t i = 0; i < green.values.size(); ++i) {
    const double g = green.values[i];
    const double n = nir.values[i];
    const double s = g + n;
    out.values.push_back(s == 0.0 ? 0.0f : static_cast<float>((g - n) / s));
  }
  return out;
}

std::vector<uint8_t> threshold_mask(const Raster& index, double threshold) {
  std::vector<uint8_t> mask;
  mask.reserve(index.values.size());
  for (float v : index.values)
    mask.push_back(static_cast<double>(v) >= threshold ? 1 : 0);
  return mask;
}

void write_mask(const std::filesystem::path& path, int64_t width, int64_t height,
                const std::vector<uint8_t>& mask01) {
  if (mask01.size() != static_cast<size_t>(width * height))
    fail(ErrorKind::invalid_argument, "mask buffer does not match extents");
  RawImage img;
  img.width = width;
  img.height = height;
  img.channels = 1;
  img.bit_depth = 8;
  img.pixels.reserve(mask01.size());
  for (uint8_t v : mask01) img.pixels.push_back(v ? 255 : 0);
  save_image(img, path);
}

}  // namespace ts
