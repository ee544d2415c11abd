#include "core/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "core/checkpoint.hpp"
#include "core/parallel.hpp"

namespace ts {

namespace {

template <class T>
std::string fmt_metric(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", std::numeric_limits<T>::max_digits10,
                static_cast<double>(static_cast<T>(v)));
  return buf;
}

template <class T>
std::string csv_row(const EpochMetrics& m) {
  std::ostringstream os;
  os << m.epoch << ',' << fmt_metric<T>(m.train_loss) << ',' << fmt_metric<T>(m.train_acc)
     << ',' << fmt_metric<T>(m.train_iou) << ',' << fmt_metric<T>(m.val_loss) << ','
     << fmt_metric<T>(m.val_acc) << ',' << fmt_metric<T>(m.val_iou);
  return os.str();
}

struct ThreadCountGuard {
  int saved;
  bool active;
  explicit ThreadCountGuard(bool deterministic) : saved(thread_count()), active(deterministic) {
    if (active) set_thread_count(1);
  }
  ~ThreadCountGuard() {
    if (active) set_thread_count(saved);
  }
};

// Keeps every decoded sample in memory when the whole set fits comfortably;
// otherwise decodes on demand.
template <class T>
class SampleSource {
 public:
  SampleSource(const Manifest& manifest, int64_t img_size) : manifest_(manifest), img_(img_size) {
    const int64_t per_sample = 4 * img_size * img_size * static_cast<int64_t>(sizeof(T));
    const int64_t total = per_sample * static_cast<int64_t>(manifest.entries.size());
    if (total <= (int64_t(1) << 29)) {
      cache_.reserve(manifest.entries.size());
      for (const auto& e : manifest.entries) cache_.push_back(load_sample<T>(e, img_));
    }
  }

  SampleT<T> operator()(size_t index) const {
    if (!cache_.empty()) return cache_[index];
    return load_sample<T>(manifest_.entries[index], img_);
  }

 private:
  const Manifest& manifest_;
  int64_t img_;
  std::vector<SampleT<T>> cache_;
};

template <class T>
struct BatchEval {
  double loss = 0.0;
  double acc = 0.0;
  double iu = 0.0;
  int64_t count = 0;
};

}  // namespace

UNetConfig model_config(const TrainConfig& cfg) {
  UNetConfig m;
  m.in_channels = cfg.in_channels;
  m.out_channels = cfg.out_channels;
  m.depth = cfg.depth;
  m.base_width = cfg.base_width;
  m.img_size = cfg.img_size;
  return m;
}

template <class T>
TrainResult<T> train(const TrainConfig& cfg, const TrainHooks<T>& hooks) {
  if (!(cfg.lr > 0.0)) fail(ErrorKind::config, "learning rate must be positive");
  if (cfg.train_batch < 1 || cfg.val_batch < 1)
    fail(ErrorKind::config, "batch sizes must be positive");
  if (cfg.max_epochs < 1) fail(ErrorKind::config, "max epochs must be positive");
  if (cfg.patience < 1) fail(ErrorKind::config, "patience must be positive");
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0))
    fail(ErrorKind::config, "split fraction must lie strictly between 0 and 1");
  const UNetConfig model = model_config(cfg);
  validate(model);

  ThreadCountGuard tguard(cfg.deterministic);

  std::vector<std::string> warnings;
  const Manifest all = scan_dataset(cfg.data_root, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  auto [train_set, val_set] = split_manifest(all, cfg.split_fraction, cfg.seed);
  if (train_set.entries.empty()) fail(ErrorKind::dataset, "training split is empty");
  if (val_set.entries.empty()) fail(ErrorKind::dataset, "validation split is empty");

  SampleSource<T> train_src(train_set, cfg.img_size);
  SampleSource<T> val_src(val_set, cfg.img_size);

  ParamStore<T> params = init_params<T>(model, cfg.seed);
  AdamState<T> adam;
  adam.lr = cfg.lr;
  EarlyStopState<T> stopper;
  stopper.patience = cfg.patience;

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory: " + cfg.out_dir.string());
  const std::filesystem::path csv_path = cfg.out_dir / "metrics.csv";
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) fail(ErrorKind::io, "cannot open for writing: " + csv_path.string());
  csv << kMetricsHeader << "\n";
  csv.flush();

  TrainResult<T> result;
  result.model = model;

  for (int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double tr_loss = 0.0, tr_acc = 0.0, tr_iou = 0.0;
    int64_t tr_n = 0;
    const auto train_batches =
        make_batches(train_set.entries.size(), cfg.train_batch, cfg.seed, epoch, true);
    for (size_t bi = 0; bi < train_batches.size(); ++bi) {
      BatchT<T> batch = assemble_batch<T>(train_batches[bi], cfg.img_size,
                                          [&](size_t i) { return train_src(i); });
      const auto bn = static_cast<int64_t>(train_batches[bi].indices.size());
      Tape<T> tape;
      auto pvars = leaf_params(tape, params);
      Var<T> input = tape.leaf(std::move(batch.images));
      Var<T> logits = unet_forward(tape, pvars, model, input);
      Var<T> loss = bce_with_logits(tape, logits, batch.masks);
      const double loss_value = static_cast<double>(tape.value(loss).data[0]);
      if (!std::isfinite(loss_value))
        fail(ErrorKind::numeric, "non-finite training loss at epoch " +
                                     std::to_string(epoch) + ", batch " +
                                     std::to_string(bi + 1));
      const TensorT<T> probs = sigmoid_values(tape.value(logits));
      const double acc = pixel_accuracy(probs, batch.masks);
      const double iu = iou(probs, batch.masks);
      tape.backward(loss);
      ParamStore<T> grads;
      for (const auto& [name, var] : pvars) grads.emplace(name, tape.grad(var));
      adam_step(params, grads, adam);
      tr_loss += loss_value * static_cast<double>(bn);
      tr_acc += acc * static_cast<double>(bn);
      tr_iou += iu * static_cast<double>(bn);
      tr_n += bn;
    }
    tr_loss /= static_cast<double>(tr_n);
    tr_acc /= static_cast<double>(tr_n);
    tr_iou /= static_cast<double>(tr_n);

    double va_loss = 0.0, va_acc = 0.0, va_iou = 0.0;
    int64_t va_n = 0;
    const auto val_batches =
        make_batches(val_set.entries.size(), cfg.val_batch, cfg.seed, epoch, false);
    for (const auto& spec : val_batches) {
      BatchT<T> batch =
          assemble_batch<T>(spec, cfg.img_size, [&](size_t i) { return val_src(i); });
      const auto bn = static_cast<int64_t>(spec.indices.size());
      Tape<T> tape;
      auto pvars = leaf_params(tape, params);
      Var<T> input = tape.leaf(std::move(batch.images));
      Var<T> logits = unet_forward(tape, pvars, model, input);
      const double loss_value = bce_mean(tape.value(logits), batch.masks);
      const TensorT<T> probs = sigmoid_values(tape.value(logits));
      va_loss += loss_value * static_cast<double>(bn);
      va_acc += pixel_accuracy(probs, batch.masks) * static_cast<double>(bn);
      va_iou += iou(probs, batch.masks) * static_cast<double>(bn);
      va_n += bn;
    }
    va_loss /= static_cast<double>(va_n);
    va_acc /= static_cast<double>(va_n);
    va_iou /= static_cast<double>(va_n);

    if (hooks.val_loss_override) va_loss = hooks.val_loss_override(epoch, va_loss);

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = tr_loss;
    m.train_acc = tr_acc;
    m.train_iou = tr_iou;
    m.val_loss = va_loss;
    m.val_acc = va_acc;
    m.val_iou = va_iou;
    csv << csv_row<T>(m) << "\n";
    csv.flush();
    if (!csv) fail(ErrorKind::io, "cannot append to " + csv_path.string());
    result.history.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);

    const StopDecision decision = early_stop_update(stopper, epoch, va_loss, params);
    if (stopper.best_epoch == epoch)
      save_checkpoint(params, model, cfg.out_dir / "best.ckpt");
    if (decision == StopDecision::stop) break;
    if (hooks.stop_request && hooks.stop_request(m)) break;
  }

  if (stopper.best_epoch < 0) {
    // every validation loss was NaN; fall back to the final parameters
    std::cerr << "warning: no epoch ever improved validation loss, keeping final parameters\n";
    result.best_params = params;
    result.best_epoch = result.history.empty() ? -1 : result.history.back().epoch;
    result.best_val_loss = std::numeric_limits<double>::quiet_NaN();
    save_checkpoint(params, model, cfg.out_dir / "best.ckpt");
  } else {
    result.best_params = stopper.best_params;
    result.best_epoch = stopper.best_epoch;
    result.best_val_loss = stopper.best_loss;
  }
  return result;
}

template <class T>
MetricTriple evaluate(const ParamStore<T>& params, const UNetConfig& model,
                      const Manifest& manifest, int64_t batch_size, int64_t img_size) {
  if (manifest.entries.empty()) fail(ErrorKind::dataset, "nothing to evaluate");
  if (batch_size < 1) fail(ErrorKind::invalid_argument, "batch size must be positive");
  validate(model);
  double loss = 0.0, acc = 0.0, iu = 0.0;
  int64_t total = 0;
  const auto batches = make_batches(manifest.entries.size(), batch_size, 0, 0, false);
  for (const auto& spec : batches) {
    BatchT<T> batch = assemble_batch<T>(spec, img_size, [&](size_t i) {
      return load_sample<T>(manifest.entries[i], img_size);
    });
    const auto bn = static_cast<int64_t>(spec.indices.size());
    Tape<T> tape;
    auto pvars = leaf_params(tape, params);
    Var<T> input = tape.leaf(std::move(batch.images));
    Var<T> logits = unet_forward(tape, pvars, model, input);
    const TensorT<T> probs = sigmoid_values(tape.value(logits));
    loss += bce_mean(tape.value(logits), batch.masks) * static_cast<double>(bn);
    acc += pixel_accuracy(probs, batch.masks) * static_cast<double>(bn);
    iu += iou(probs, batch.masks) * static_cast<double>(bn);
    total += bn;
  }
  MetricTriple out;
  out.loss = loss / static_cast<double>(total);
  out.accuracy = acc / static_cast<double>(total);
  out.iou = iu / static_cast<double>(total);
  return out;
}

template <class T>
void predict_mask(const ParamStore<T>& params, const UNetConfig& model,
                  const std::filesystem::path& image_path,
                  const std::filesystem::path& mask_out_path) {
  validate(model);
  RawImage img = load_image(image_path);
  if (img.bit_depth != 8)
    fail(ErrorKind::format, "unsupported bit depth " + std::to_string(img.bit_depth) +
                                " (expected 8): " + image_path.string());
  const int64_t div = int64_t(1) << model.depth;
  int64_t th = model.img_size, tw = model.img_size;
  if (img.height % div == 0 && img.width % div == 0 && img.height >= div &&
      img.width >= div) {
    th = img.height;
    tw = img.width;
  }
  TensorT<T> chw = image_to_input<T>(img, th, tw);
  TensorT<T> input = TensorT<T>::from_values({1, 3, th, tw}, std::move(chw.data));

  Tape<T> tape;
  auto pvars = leaf_params(tape, params);
  Var<T> in = tape.leaf(std::move(input));
  Var<T> logits = unet_forward(tape, pvars, model, in);
  const TensorT<T> probs = sigmoid_values(tape.value(logits));

  RawImage mask;
  mask.width = tw;
  mask.height = th;
  mask.channels = 1;
  mask.bit_depth = 8;
  mask.pixels.reserve(static_cast<size_t>(th * tw));
  for (int64_t i = 0; i < th * tw; ++i)
    mask.pixels.push_back(static_cast<double>(probs.data[static_cast<size_t>(i)]) >= 0.5 ? 255 : 0);
  save_image(mask, mask_out_path);
}

#define TS_TRAINER_DEF(T)                                                  \
  template TrainResult<T> train<T>(const TrainConfig&, const TrainHooks<T>&); \
  template MetricTriple evaluate<T>(const ParamStore<T>&, const UNetConfig&, const Manifest&, int64_t, int64_t); \
  template void predict_mask<T>(const ParamStore<T>&, const UNetConfig&, const std::filesystem::path&, const std::filesystem::path&);
TS_TRAINER_DEF(float)
TS_TRAINER_DEF(double)
#undef TS_TRAINER_DEF

}  // namespace ts
