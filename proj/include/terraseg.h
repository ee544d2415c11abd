#ifndef TERRASEG_H
#define TERRASEG_H

/* C interface to the terraseg segmentation library. Every entry point except
 * the accessors returns ts_status; on failure ts_last_error() holds a
 * human-readable message for the calling thread until its next call. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ts_status {
  TS_OK = 0,
  TS_ERR_INVALID_ARGUMENT = 1,
  TS_ERR_SHAPE = 2,
  TS_ERR_IO = 3,
  TS_ERR_FORMAT = 4,
  TS_ERR_DATASET = 5,
  TS_ERR_CONFIG = 6,
  TS_ERR_INTEGRITY = 7,
  TS_ERR_VERSION = 8,
  TS_ERR_NUMERIC = 9,
  TS_ERR_INTERNAL = 10
} ts_status;

const char* ts_version(void);
const char* ts_status_name(ts_status status);

/* Message for the most recent failing call on this thread; empty string when
 * the last call succeeded. The pointer stays valid until the thread's next
 * library call. */
const char* ts_last_error(void);

/* Worker threads for the compute kernels. n < 1 restores the default
 * (hardware concurrency, capped). */
ts_status ts_set_threads(int n);
int ts_get_threads(void);

typedef struct ts_train_options {
  double lr;
  int64_t train_batch;
  int64_t val_batch;
  int64_t max_epochs;
  int64_t patience;
  double split_fraction;
  uint64_t seed;
  int64_t img_size;
  int64_t depth;
  int64_t base_width;
  int64_t in_channels;
  int64_t out_channels;
  int deterministic; /* nonzero forces single-threaded kernels */
} ts_train_options;

/* Fills opts with the library defaults. */
void ts_train_options_init(ts_train_options* opts);

typedef struct ts_epoch_metrics {
  int64_t epoch;
  double train_loss;
  double train_acc;
  double train_iou;
  double val_loss;
  double val_acc;
  double val_iou;
} ts_epoch_metrics;

typedef void (*ts_epoch_fn)(const ts_epoch_metrics* metrics, void* user);

/* Trains on data_root (images/ + masks/ pairs), writing metrics.csv and
 * best.ckpt under out_dir. opts may be NULL for defaults; on_epoch, when
 * non-NULL, fires once per completed epoch. */
ts_status ts_train(const char* data_root, const char* out_dir,
                   const ts_train_options* opts, ts_epoch_fn on_epoch,
                   void* user);

typedef struct ts_model ts_model;

typedef struct ts_model_desc {
  int64_t in_channels;
  int64_t out_channels;
  int64_t depth;
  int64_t base_width;
  int64_t img_size;
  int64_t param_count;
} ts_model_desc;

typedef struct ts_metrics {
  double accuracy;
  double loss;
  double iou;
} ts_metrics;

/* Loads a checkpoint into a new handle. On failure *out is untouched. */
ts_status ts_model_open(const char* checkpoint_path, ts_model** out);

/* NULL is a no-op. The handle must not be used afterwards. */
void ts_model_close(ts_model* model);

ts_status ts_model_info(const ts_model* model, ts_model_desc* out);

/* Segments one image and writes a {0, 255} mask to mask_out_path. */
ts_status ts_model_predict(const ts_model* model, const char* image_path,
                           const char* mask_out_path);

/* Forward-only metrics over every image/mask pair under data_root. */
ts_status ts_model_evaluate(const ts_model* model, const char* data_root,
                            int64_t batch_size, ts_metrics* out);

/* (green - nir) / (green + nir) per pixel, thresholded into a {0, 255} mask
 * written to mask_out_path. Both bands must be single-channel rasters of
 * identical extents. */
ts_status ts_ndwi(const char* green_path, const char* nir_path,
                  const char* mask_out_path, double threshold);

/* Renders accuracy.svg, loss.svg and iou.svg under out_dir from a training
 * metrics CSV. */
ts_status ts_plot_curves(const char* csv_path, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* TERRASEG_H */
