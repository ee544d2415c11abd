#include "core/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "core/rng.hpp"

namespace ts {

namespace {

namespace fs = std::filesystem;

bool recognized_ext(const std::string& ext) {
  if (ext == ".png" || ext == ".pgm" || ext == ".ppm") return true;
  if (jpeg_supported() && (ext == ".jpg" || ext == ".jpeg")) return true;
  return false;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::map<std::string, std::string> collect_dir(const fs::path& dir, const char* what,
                                               std::vector<std::string>* warnings) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (recognized_ext(lower(entry.path().extension().string()))) names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  std::map<std::string, std::string> by_stem;
  for (const std::string& name : names) {
    const std::string stem = fs::path(name).stem().string();
    if (!by_stem.emplace(stem, name).second && warnings)
      warnings->push_back(std::string("duplicate ") + what + " stem, keeping first: " + name);
  }
  return by_stem;
}

}  // namespace

Manifest scan_dataset(const fs::path& root, std::vector<std::string>* warnings) {
  const fs::path images = root / "images";
  const fs::path masks = root / "masks";
  if (!fs::is_directory(images))
    fail(ErrorKind::config, "dataset root has no images/ directory: " + root.string());
  if (!fs::is_directory(masks))
    fail(ErrorKind::config, "dataset root has no masks/ directory: " + root.string());
  auto image_map = collect_dir(images, "image", warnings);
  auto mask_map = collect_dir(masks, "mask", warnings);

  Manifest m;
  m.root = root;
  for (const auto& [stem, name] : image_map) {
    auto it = mask_map.find(stem);
    if (it == mask_map.end()) {
      if (warnings) warnings->push_back("image without mask: " + name);
      continue;
    }
    m.entries.push_back({stem, images / name, masks / it->second});
  }
  if (warnings) {
    for (const auto& [stem, name] : mask_map)
      if (image_map.find(stem) == image_map.end())
        warnings->push_back("mask without image: " + name);
  }
  if (m.entries.empty())
    fail(ErrorKind::dataset, "no paired image/mask files under " + root.string());
  return m;
}

std::pair<Manifest, Manifest> split_manifest(const Manifest& manifest,
                                             double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorKind::invalid_argument, "train fraction must lie strictly between 0 and 1");
  const size_t n = manifest.entries.size();
  if (n < 2) fail(ErrorKind::dataset, "need at least 2 samples to split, got " + std::to_string(n));
  std::vector<size_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = i;
  SplitMix64 rng(seed);
  fisher_yates(perm, rng);
  const auto n_train = static_cast<size_t>(
      std::floor(static_cast<double>(n) * train_fraction));
  Manifest train, val;
  train.root = manifest.root;
  val.root = manifest.root;
  for (size_t i = 0; i < n; ++i) {
    (i < n_train ? train : val).entries.push_back(manifest.entries[perm[i]]);
  }
  auto by_stem = [](const ManifestEntry& a, const ManifestEntry& b) {
    return a.stem < b.stem;
  };
  std::sort(train.entries.begin(), train.entries.end(), by_stem);
  std::sort(val.entries.begin(), val.entries.end(), by_stem);
  return {std::move(train), std::move(val)};
}

template <class T>
TensorT<T> image_to_input(const RawImage& img, int64_t out_h, int64_t out_w) {
  if (img.bit_depth != 8)
    fail(ErrorKind::format, "expected an 8-bit image, got " + std::to_string(img.bit_depth) + "-bit");
  if (img.channels != 1 && img.channels != 3)
    fail(ErrorKind::format, "expected 1 or 3 channels, got " + std::to_string(img.channels));
  TensorT<T> out = TensorT<T>::zeros({3, out_h, out_w});
  const double sy_scale = static_cast<double>(img.height) / static_cast<double>(out_h);
  const double sx_scale = static_cast<double>(img.width) / static_cast<double>(out_w);
  for (int64_t y = 0; y < out_h; ++y) {
    double sy = (static_cast<double>(y) + 0.5) * sy_scale - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    const auto y0 = static_cast<int64_t>(sy);
    const int64_t y1 = std::min(y0 + 1, img.height - 1);
    const double wy = sy - static_cast<double>(y0);
    for (int64_t x = 0; x < out_w; ++x) {
      double sx = (static_cast<double>(x) + 0.5) * sx_scale - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
      const auto x0 = static_cast<int64_t>(sx);
      const int64_t x1 = std::min(x0 + 1, img.width - 1);
      const double wx = sx - static_cast<double>(x0);
      for (int c = 0; c < 3; ++c) {
        const int sc = img.channels == 1 ? 0 : c;
        const double v00 = img.sample(y0, x0, sc);
        const double v01 = img.sample(y0, x1, sc);
        const double v10 = img.sample(y1, x0, sc);
        const double v11 = img.sample(y1, x1, sc);
        const double top = v00 * (1.0 - wx) + v01 * wx;
        const double bot = v10 * (1.0 - wx) + v11 * wx;
        const double v = (top * (1.0 - wy) + bot * wy) / 255.0;
        out.data[static_cast<size_t>((c * out_h + y) * out_w + x)] = static_cast<T>(v);
      }
    }
  }
  return out;
}

template <class T>
SampleT<T> load_sample(const ManifestEntry& entry, int64_t target_size) {
  if (target_size < 1)
    fail(ErrorKind::invalid_argument, "target size must be positive");
  SampleT<T> s;
  {
    RawImage img = load_image(entry.image_path);
    if (img.bit_depth != 8)
      fail(ErrorKind::format, "unsupported bit depth " + std::to_string(img.bit_depth) +
                                  " (expected 8): " + entry.image_path.string());
    s.image = image_to_input<T>(img, target_size, target_size);
  }
  {
    RawImage mask = load_image(entry.mask_path);
    if (mask.bit_depth != 8)
      fail(ErrorKind::format, "unsupported bit depth " + std::to_string(mask.bit_depth) +
                                  " (expected 8): " + entry.mask_path.string());
    RawImage gray = to_gray(mask);
    RawImage resized = resize_nearest(gray, target_size, target_size);
    s.mask = TensorT<T>::zeros({1, target_size, target_size});
    for (size_t i = 0; i < resized.pixels.size(); ++i)
      s.mask.data[i] = resized.pixels[i] >= 128 ? T(1) : T(0);
  }
  return s;
}

std::vector<BatchSpec> make_batches(size_t sample_count, int64_t batch_size,
                                    uint64_t seed, int64_t epoch, bool shuffle) {
  if (batch_size < 1) fail(ErrorKind::invalid_argument, "batch size must be positive");
  std::vector<size_t> order(sample_count);
  for (size_t i = 0; i < sample_count; ++i) order[i] = i;
  if (shuffle) {
    SplitMix64 rng(hash64(seed, static_cast<uint64_t>(epoch)));
    fisher_yates(order, rng);
  }
  std::vector<BatchSpec> batches;
  for (size_t at = 0; at < sample_count; at += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(sample_count, at + static_cast<size_t>(batch_size));
    BatchSpec b;
    b.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
    batches.push_back(std::move(b));
  }
  return batches;
}

template <class T>
BatchT<T> assemble_batch(const BatchSpec& spec, int64_t target_size,
                         const std::function<SampleT<T>(size_t)>& sample_at) {
  if (spec.indices.empty())
    fail(ErrorKind::invalid_argument, "batch must reference at least one sample");
  const auto n = static_cast<int64_t>(spec.indices.size());
  BatchT<T> batch;
  batch.images = TensorT<T>::zeros({n, 3, target_size, target_size});
  batch.masks = TensorT<T>::zeros({n, 1, target_size, target_size});
  const int64_t isz = 3 * target_size * target_size;
  const int64_t msz = target_size * target_size;
  for (int64_t i = 0; i < n; ++i) {
    SampleT<T> s = sample_at(spec.indices[static_cast<size_t>(i)]);
    if (s.image.shape != Shape{3, target_size, target_size} ||
        s.mask.shape != Shape{1, target_size, target_size})
      fail(ErrorKind::shape, "sample does not match batch extents");
    std::copy(s.image.data.begin(), s.image.data.end(),
              batch.images.data.begin() + static_cast<std::ptrdiff_t>(i * isz));
    std::copy(s.mask.data.begin(), s.mask.data.end(),
              batch.masks.data.begin() + static_cast<std::ptrdiff_t>(i * msz));
  }
  return batch;
}

#define TS_DATASET_DEF(T)                                           \
  template SampleT<T> load_sample<T>(const ManifestEntry&, int64_t); \
  template BatchT<T> assemble_batch<T>(const BatchSpec&, int64_t, const std::function<SampleT<T>(size_t)>&); \
  template TensorT<T> image_to_input<T>(const RawImage&, int64_t, int64_t);
TS_DATASET_DEF(float)
TS_DATASET_DEF(double)
#undef TS_DATASET_DEF

}  // namespace ts
