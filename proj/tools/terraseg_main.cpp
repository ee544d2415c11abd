// Command-line front end. Links only against the public C API.

#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "terraseg.h"

namespace {

int die(ts_status status) {
  std::fprintf(stderr, "terraseg: %s\n", ts_last_error());
  std::fprintf(stderr, "terraseg: status %s\n", ts_status_name(status));
  return 2;
}

void print_epoch(const ts_epoch_metrics* m, void*) {
  std::fprintf(stderr,
               "epoch %3lld  train loss %.4f acc %.4f iou %.4f | "
               "val loss %.4f acc %.4f iou %.4f\n",
               static_cast<long long>(m->epoch), m->train_loss, m->train_acc,
               m->train_iou, m->val_loss, m->val_acc, m->val_iou);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"terraseg: U-Net segmentation of forest and water in aerial imagery"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");
  app.failure_message(CLI::FailureMessage::help);

  ts_train_options opts;
  ts_train_options_init(&opts);

  std::string data_dir, out_path, checkpoint, image_path;
  std::string green_path, nir_path, metrics_csv;
  double threshold = 0.0;
  int64_t eval_batch = opts.val_batch;

  auto* train = app.add_subcommand("train", "Train a model on an images/ + masks/ directory");
  train->add_option("--data", data_dir, "Dataset root containing images/ and masks/")->required();
  train->add_option("--out", out_path, "Output directory for best.ckpt and metrics.csv")->required();
  train->add_option("--lr", opts.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--batch", opts.train_batch, "Training batch size")->capture_default_str();
  train->add_option("--val-batch", opts.val_batch, "Validation batch size")->capture_default_str();
  train->add_option("--epochs", opts.max_epochs, "Maximum epochs")->capture_default_str();
  train->add_option("--patience", opts.patience, "Early-stopping patience in epochs")->capture_default_str();
  train->add_option("--split", opts.split_fraction, "Training fraction of the train/val split")->capture_default_str();
  train->add_option("--seed", opts.seed, "Seed for init, split and shuffling")->capture_default_str();
  train->add_option("--img-size", opts.img_size, "Square side images are resized to")->capture_default_str();
  train->add_option("--depth", opts.depth, "Encoder/decoder stages")->capture_default_str();
  train->add_option("--width", opts.base_width, "Channels of the first encoder stage")->capture_default_str();
  train->add_flag("--deterministic", [&](int64_t) { opts.deterministic = 1; },
                  "Single-threaded kernels for bitwise-reproducible runs");

  auto* eval = app.add_subcommand("eval", "Report accuracy/loss/IoU of a checkpoint on a dataset");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", data_dir, "Dataset root containing images/ and masks/")->required();
  eval->add_option("--val-batch", eval_batch, "Batch size")->capture_default_str();

  auto* predict = app.add_subcommand("predict", "Segment one image into a {0,255} mask");
  predict->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  predict->add_option("--image", image_path, "Input image (PNG, PGM or PPM)")->required();
  predict->add_option("--out", out_path, "Output mask path")->required();

  auto* ndwi = app.add_subcommand("ndwi", "Threshold (green - NIR)/(green + NIR) into a water mask");
  ndwi->add_option("--green", green_path, "Green band raster")->required();
  ndwi->add_option("--nir", nir_path, "Near-infrared band raster")->required();
  ndwi->add_option("--out", out_path, "Output mask path")->required();
  ndwi->add_option("--threshold", threshold, "Water decision threshold on the index")->capture_default_str();

  auto* plot = app.add_subcommand("plot", "Render metric curves from a training metrics CSV");
  plot->add_option("--metrics", metrics_csv, "metrics.csv produced by train")->required();
  plot->add_option("--out", out_path, "Directory for accuracy.svg, loss.svg, iou.svg")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (train->parsed()) {
    const ts_status s =
        ts_train(data_dir.c_str(), out_path.c_str(), &opts, print_epoch, nullptr);
    if (s != TS_OK) return die(s);
    return 0;
  }

  if (eval->parsed()) {
    ts_model* model = nullptr;
    ts_status s = ts_model_open(checkpoint.c_str(), &model);
    if (s != TS_OK) return die(s);
    ts_metrics m;
    s = ts_model_evaluate(model, data_dir.c_str(), eval_batch, &m);
    ts_model_close(model);
    if (s != TS_OK) return die(s);
    std::printf("accuracy %.6f\n", m.accuracy);
    std::printf("loss %.6f\n", m.loss);
    std::printf("iou %.6f\n", m.iou);
    return 0;
  }

  if (predict->parsed()) {
    ts_model* model = nullptr;
    ts_status s = ts_model_open(checkpoint.c_str(), &model);
    if (s != TS_OK) return die(s);
    s = ts_model_predict(model, image_path.c_str(), out_path.c_str());
    ts_model_close(model);
    if (s != TS_OK) return die(s);
    return 0;
  }

  if (ndwi->parsed()) {
    const ts_status s =
        ts_ndwi(green_path.c_str(), nir_path.c_str(), out_path.c_str(), threshold);
    if (s != TS_OK) return die(s);
    return 0;
  }

  if (plot->parsed()) {
    const ts_status s = ts_plot_curves(metrics_csv.c_str(), out_path.c_str());
    if (s != TS_OK) return die(s);
    return 0;
  }

  return 1;
}
