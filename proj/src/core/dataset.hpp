#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "core/image_io.hpp"
#include "core/tensor.hpp"

namespace ts {

struct ManifestEntry {
  std::string stem;
  std::filesystem::path image_path;
  std::filesystem::path mask_path;
};

// Paired image/mask files, sorted by stem.
struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
};

// Pairs files in root/images and root/masks by filename stem. Unpaired or
// duplicated stems are reported through warnings and skipped; an empty result
// is an error.
Manifest scan_dataset(const std::filesystem::path& root,
                      std::vector<std::string>* warnings = nullptr);

// Shuffles entries with the given seed and puts the first
// floor(n * train_fraction) into the train manifest, the rest into val.
// Both halves come back sorted by stem.
std::pair<Manifest, Manifest> split_manifest(const Manifest& manifest,
                                             double train_fraction, uint64_t seed);

template <class T>
struct SampleT {
  TensorT<T> image;  // [3, S, S] in [0, 1]
  TensorT<T> mask;   // [1, S, S] in {0, 1}
};

// Decodes, resizes (bilinear for the image, nearest for the mask) and
// normalizes one pair. Mask pixels binarize at half intensity: >= 128 means
// foreground. Sources must be 8-bit.
template <class T>
SampleT<T> load_sample(const ManifestEntry& entry, int64_t target_size);

struct BatchSpec {
  std::vector<size_t> indices;
};

// Batch membership for one epoch. Training epochs reshuffle with
// hash64(seed, epoch); validation keeps manifest order. The last batch may
// be short.
std::vector<BatchSpec> make_batches(size_t sample_count, int64_t batch_size,
                                    uint64_t seed, int64_t epoch, bool shuffle);

template <class T>
struct BatchT {
  TensorT<T> images;  // [N, 3, S, S]
  TensorT<T> masks;   // [N, 1, S, S]
};

// Stacks the referenced samples. The loader takes an index and lets callers
// interpose a cache.
template <class T>
BatchT<T> assemble_batch(const BatchSpec& spec, int64_t target_size,
                         const std::function<SampleT<T>(size_t)>& sample_at);

// Bilinear channel resize of a decoded 8-bit image to [3, out_h, out_w] in
// [0, 1]; grayscale sources replicate across the three channels.
template <class T>
TensorT<T> image_to_input(const RawImage& img, int64_t out_h, int64_t out_w);

#define TS_DATASET_DECL(T)                                                 \
  extern template SampleT<T> load_sample<T>(const ManifestEntry&, int64_t); \
  extern template BatchT<T> assemble_batch<T>(const BatchSpec&, int64_t, const std::function<SampleT<T>(size_t)>&); \
  extern template TensorT<T> image_to_input<T>(const RawImage&, int64_t, int64_t);
TS_DATASET_DECL(float)
TS_DATASET_DECL(double)
#undef TS_DATASET_DECL

}  // namespace ts
