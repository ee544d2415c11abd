#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "core/error.hpp"

namespace ts {

struct EpochMetrics {
  int64_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double train_iou = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double val_iou = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,train_loss,train_acc,train_iou,val_loss,val_acc,val_iou";

// Strict reader for the training log: exact header, seven numeric fields per
// row. Errors name the offending line.
std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path);

// Renders accuracy.svg, loss.svg and iou.svg into out_dir, each with a train
// and a validation polyline plus per-epoch markers.
void plot_curves(const std::filesystem::path& metrics_csv,
                 const std::filesystem::path& out_dir);

}  // namespace ts
