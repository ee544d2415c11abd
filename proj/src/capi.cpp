#include "terraseg.h"

#include <exception>
#include <iostream>
#include <string>
#include <utility>

#include "core/checkpoint.hpp"
#include "core/ndwi.hpp"
#include "core/parallel.hpp"
#include "core/svg_plot.hpp"
#include "core/trainer.hpp"

struct ts_model {
  ts::ParamStore<float> params;
  ts::UNetConfig config;
};

namespace {

thread_local std::string g_last_error;

ts_status status_of(ts::ErrorKind kind) {
  using ts::ErrorKind;
  switch (kind) {
    case ErrorKind::invalid_argument: return TS_ERR_INVALID_ARGUMENT;
    case ErrorKind::shape: return TS_ERR_SHAPE;
    case ErrorKind::io: return TS_ERR_IO;
    case ErrorKind::format: return TS_ERR_FORMAT;
    case ErrorKind::dataset: return TS_ERR_DATASET;
    case ErrorKind::config: return TS_ERR_CONFIG;
    case ErrorKind::integrity: return TS_ERR_INTEGRITY;
    case ErrorKind::version: return TS_ERR_VERSION;
    case ErrorKind::numeric: return TS_ERR_NUMERIC;
    case ErrorKind::contract: return TS_ERR_INVALID_ARGUMENT;
    case ErrorKind::internal: return TS_ERR_INTERNAL;
  }
  return TS_ERR_INTERNAL;
}

template <class Fn>
ts_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return TS_OK;
  } catch (const ts::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TS_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) ts::fail(ts::ErrorKind::invalid_argument, what);
}

}  // namespace

extern "C" {

const char* ts_version(void) { return "1.0.0"; }

const char* ts_status_name(ts_status status) {
  switch (status) {
    case TS_OK: return "ok";
    case TS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case TS_ERR_SHAPE: return "shape";
    case TS_ERR_IO: return "io";
    case TS_ERR_FORMAT: return "format";
    case TS_ERR_DATASET: return "dataset";
    case TS_ERR_CONFIG: return "config";
    case TS_ERR_INTEGRITY: return "integrity";
    case TS_ERR_VERSION: return "version";
    case TS_ERR_NUMERIC: return "numeric";
    case TS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* ts_last_error(void) { return g_last_error.c_str(); }

ts_status ts_set_threads(int n) {
  return guarded([&] { ts::set_thread_count(n); });
}

int ts_get_threads(void) { return ts::thread_count(); }

void ts_train_options_init(ts_train_options* opts) {
  if (!opts) return;
  const ts::TrainConfig d;
  opts->lr = d.lr;
  opts->train_batch = d.train_batch;
  opts->val_batch = d.val_batch;
  opts->max_epochs = d.max_epochs;
  opts->patience = d.patience;
  opts->split_fraction = d.split_fraction;
  opts->seed = d.seed;
  opts->img_size = d.img_size;
  opts->depth = d.depth;
  opts->base_width = d.base_width;
  opts->in_channels = d.in_channels;
  opts->out_channels = d.out_channels;
  opts->deterministic = d.deterministic ? 1 : 0;
}

ts_status ts_train(const char* data_root, const char* out_dir,
                   const ts_train_options* opts, ts_epoch_fn on_epoch,
                   void* user) {
  return guarded([&] {
    require(data_root != nullptr, "data_root must be non-null");
    require(out_dir != nullptr, "out_dir must be non-null");
    ts::TrainConfig cfg;
    cfg.data_root = data_root;
    cfg.out_dir = out_dir;
    if (opts) {
      cfg.lr = opts->lr;
      cfg.train_batch = opts->train_batch;
      cfg.val_batch = opts->val_batch;
      cfg.max_epochs = opts->max_epochs;
      cfg.patience = opts->patience;
      cfg.split_fraction = opts->split_fraction;
      cfg.seed = opts->seed;
      cfg.img_size = opts->img_size;
      cfg.depth = opts->depth;
      cfg.base_width = opts->base_width;
      cfg.in_channels = opts->in_channels;
      cfg.out_channels = opts->out_channels;
      cfg.deterministic = opts->deterministic != 0;
    }
    ts::TrainHooks<float> hooks;
    if (on_epoch) {
      hooks.on_epoch = [on_epoch, user](const ts::EpochMetrics& m) {
        ts_epoch_metrics em;
        em.epoch = m.epoch;
        em.train_loss = m.train_loss;
        em.train_acc = m.train_acc;
        em.train_iou = m.train_iou;
        em.val_loss = m.val_loss;
        em.val_acc = m.val_acc;
        em.val_iou = m.val_iou;
        on_epoch(&em, user);
      };
    }
    ts::train<float>(cfg, hooks);
  });
}

ts_status ts_model_open(const char* checkpoint_path, ts_model** out) {
  return guarded([&] {
    require(checkpoint_path != nullptr, "checkpoint_path must be non-null");
    require(out != nullptr, "out must be non-null");
    auto loaded = ts::load_checkpoint(checkpoint_path);
    *out = new ts_model{std::move(loaded.first), loaded.second};
  });
}

void ts_model_close(ts_model* model) { delete model; }

ts_status ts_model_info(const ts_model* model, ts_model_desc* out) {
  return guarded([&] {
    require(model != nullptr, "model must be non-null");
    require(out != nullptr, "out must be non-null");
    out->in_channels = model->config.in_channels;
    out->out_channels = model->config.out_channels;
    out->depth = model->config.depth;
    out->base_width = model->config.base_width;
    out->img_size = model->config.img_size;
    out->param_count = ts::param_count(model->config);
  });
}

ts_status ts_model_predict(const ts_model* model, const char* image_path,
                           const char* mask_out_path) {
  return guarded([&] {
    require(model != nullptr, "model must be non-null");
    require(image_path != nullptr, "image_path must be non-null");
    require(mask_out_path != nullptr, "mask_out_path must be non-null");
    ts::predict_mask<float>(model->params, model->config, image_path,
                            mask_out_path);
  });
}

ts_status ts_model_evaluate(const ts_model* model, const char* data_root,
                            int64_t batch_size, ts_metrics* out) {
  return guarded([&] {
    require(model != nullptr, "model must be non-null");
    require(data_root != nullptr, "data_root must be non-null");
    require(out != nullptr, "out must be non-null");
    std::vector<std::string> warnings;
    const ts::Manifest manifest = ts::scan_dataset(data_root, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    const ts::MetricTriple m =
        ts::evaluate<float>(model->params, model->config, manifest, batch_size,
                            model->config.img_size);
    out->accuracy = m.accuracy;
    out->loss = m.loss;
    out->iou = m.iou;
  });
}

ts_status ts_ndwi(const char* green_path, const char* nir_path,
                  const char* mask_out_path, double threshold) {
  return guarded([&] {
    require(green_path != nullptr, "green_path must be non-null");
    require(nir_path != nullptr, "nir_path must be non-null");
    require(mask_out_path != nullptr, "mask_out_path must be non-null");
    const ts::Raster green = ts::load_band(green_path);
    const ts::Raster nir = ts::load_band(nir_path);
    const ts::Raster index = ts::compute_ndwi(green, nir);
    const std::vector<uint8_t> mask = ts::threshold_mask(index, threshold);
    ts::write_mask(mask_out_path, index.width, index.height, mask);
  });
}

ts_status ts_plot_curves(const char* csv_path, const char* out_dir) {
  return guarded([&] {
    require(csv_path != nullptr, "csv_path must be non-null");
    require(out_dir != nullptr, "out_dir must be non-null");
    ts::plot_curves(csv_path, out_dir);
  });
}

}  // extern "C"
