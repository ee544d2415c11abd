#pragma once

#include <filesystem>
#include <functional>

#include "core/dataset.hpp"
#include "core/metrics.hpp"
#include "core/optim.hpp"
#include "core/svg_plot.hpp"
#include "core/unet.hpp"

namespace ts {

struct TrainConfig {
  std::filesystem::path data_root;
  std::filesystem::path out_dir;
  double lr = 1e-3;
  int64_t train_batch = 32;
  int64_t val_batch = 24;
  int64_t max_epochs = 50;
  int64_t patience = 9;
  double split_fraction = 0.8;
  uint64_t seed = 0;
  int64_t img_size = 256;
  int64_t in_channels = 3;
  int64_t out_channels = 1;
  int64_t depth = 4;
  int64_t base_width = 64;
  bool deterministic = false;  // forces single-threaded kernels
};

UNetConfig model_config(const TrainConfig& cfg);

// Seams used by tests and embedders. val_loss_override substitutes the value
// fed to early stopping and the log; stop_request ends training after the
// epoch it fires on.
template <class T>
struct TrainHooks {
  std::function<double(int64_t epoch, double computed)> val_loss_override;
  std::function<void(const EpochMetrics&)> on_epoch;
  std::function<bool(const EpochMetrics&)> stop_request;
};

template <class T>
struct TrainResult {
  ParamStore<T> best_params;
  UNetConfig model;
  std::vector<EpochMetrics> history;
  int64_t best_epoch = -1;
  double best_val_loss = 0.0;
};

// Full training loop: scan, split, init, per-epoch shuffled batches, Adam
// updates, validation, metrics.csv appends, checkpoint-on-improvement to
// out_dir/best.ckpt, early stopping with in-memory restore-best.
// Training metrics are accumulated from the same forward pass that produces
// each update, i.e. they describe the parameters before that update.
template <class T>
TrainResult<T> train(const TrainConfig& cfg, const TrainHooks<T>& hooks = {});

// Forward-only metrics over a manifest. Parameters are untouched.
template <class T>
MetricTriple evaluate(const ParamStore<T>& params, const UNetConfig& model,
                      const Manifest& manifest, int64_t batch_size, int64_t img_size);

// Segments one image. Inputs whose extents already fit the model (divisible
// by 2^depth) keep their size; anything else is resized to the model's
// training extent. The mask holds only 0 and 255.
template <class T>
void predict_mask(const ParamStore<T>& params, const UNetConfig& model,
                  const std::filesystem::path& image_path,
                  const std::filesystem::path& mask_out_path);

#define TS_TRAINER_DECL(T)                                                  \
  extern template TrainResult<T> train<T>(const TrainConfig&, const TrainHooks<T>&); \
  extern template MetricTriple evaluate<T>(const ParamStore<T>&, const UNetConfig&, const Manifest&, int64_t, int64_t); \
  extern template void predict_mask<T>(const ParamStore<T>&, const UNetConfig&, const std::filesystem::path&, const std::filesystem::path&);
TS_TRAINER_DECL(float)
TS_TRAINER_DECL(double)
#undef TS_TRAINER_DECL

}  // namespace ts
