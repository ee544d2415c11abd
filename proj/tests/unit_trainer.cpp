#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/trainer.hpp"
#include "doctest.h"
#include "support/pnm.hpp"
#include "support/synth.hpp"
#include "support/temp_dir.hpp"

using tsupport::TempDir;

namespace {

ts::TrainConfig tiny_cfg(const std::filesystem::path& data,
                         const std::filesystem::path& out) {
  ts::TrainConfig cfg;
  cfg.data_root = data;
  cfg.out_dir = out;
  cfg.lr = 1e-3;
  cfg.train_batch = 8;
  cfg.val_batch = 8;
  cfg.max_epochs = 3;
  cfg.patience = 9;
  cfg.split_fraction = 0.8;
  cfg.seed = 7;
  cfg.img_size = 8;
  cfg.depth = 1;
  cfg.base_width = 2;
  return cfg;
}

bool params_equal(const ts::ParamStore<float>& a, const ts::ParamStore<float>& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, tensor] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second.shape != tensor.shape) return false;
    if (std::memcmp(it->second.data.data(), tensor.data.data(),
                    tensor.data.size() * sizeof(float)) != 0)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("model_config lifts the model fields") {
  ts::TrainConfig cfg;
  cfg.img_size = 32;
  cfg.depth = 3;
  cfg.base_width = 8;
  cfg.in_channels = 3;
  cfg.out_channels = 1;
  const auto model = ts::model_config(cfg);
  CHECK(model.img_size == 32);
  CHECK(model.depth == 3);
  CHECK(model.base_width == 8);
  CHECK(model.in_channels == 3);
  CHECK(model.out_channels == 1);
}

TEST_CASE("train rejects a broken config before touching data") {
  TempDir dir;
  auto expect_config = [&](auto mutate) {
    auto cfg = tiny_cfg(dir / "nonexistent", dir / "out");
    mutate(cfg);
    try {
      ts::train<float>(cfg);
      FAIL("expected throw");
    } catch (const ts::Error& e) {
      CHECK(e.kind() == ts::ErrorKind::config);
    }
  };
  expect_config([](ts::TrainConfig& c) { c.lr = 0.0; });
  expect_config([](ts::TrainConfig& c) { c.lr = -1.0; });
  expect_config([](ts::TrainConfig& c) { c.train_batch = 0; });
  expect_config([](ts::TrainConfig& c) { c.max_epochs = 0; });
  expect_config([](ts::TrainConfig& c) { c.patience = 0; });
  expect_config([](ts::TrainConfig& c) { c.split_fraction = 1.0; });
  expect_config([](ts::TrainConfig& c) {
    c.depth = 2;
    c.img_size = 10;  // not divisible by 2^depth
  });
}

TEST_CASE("an easy task trains down and leaves consistent artifacts") {
  TempDir dir;
  const auto data = dir / "data";
  const auto out = dir / "out";
  tsupport::make_block_dataset(data, 12, 16, 5);

  auto cfg = tiny_cfg(data, out);
  cfg.img_size = 16;
  cfg.depth = 2;
  cfg.base_width = 4;
  cfg.train_batch = 4;
  cfg.val_batch = 4;
  cfg.max_epochs = 5;
  cfg.split_fraction = 0.75;
  cfg.lr = 5e-3;

  std::vector<int64_t> seen_epochs;
  ts::TrainHooks<float> hooks;
  hooks.on_epoch = [&](const ts::EpochMetrics& m) { seen_epochs.push_back(m.epoch); };

  const auto result = ts::train<float>(cfg, hooks);

  REQUIRE(result.history.size() == 5);
  CHECK(seen_epochs == std::vector<int64_t>{1, 2, 3, 4, 5});
  CHECK(result.history.back().train_loss < result.history.front().train_loss);
  for (const auto& m : result.history) {
    CHECK(std::isfinite(m.train_loss));
    CHECK(m.train_acc >= 0.0);
    CHECK(m.train_acc <= 1.0);
    CHECK(m.val_iou >= 0.0);
    CHECK(m.val_iou <= 1.0);
  }

  // the log round-trips through the csv reader
  const auto rows = ts::read_metrics_csv(out / "metrics.csv");
  REQUIRE(rows.size() == 5);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].epoch == result.history[i].epoch);
    CHECK(rows[i].train_loss == doctest::Approx(result.history[i].train_loss));
    CHECK(rows[i].val_loss == doctest::Approx(result.history[i].val_loss));
    CHECK(rows[i].val_acc == doctest::Approx(result.history[i].val_acc));
  }

  // best_epoch names the minimum of the val column
  double best = std::numeric_limits<double>::infinity();
  int64_t best_at = -1;
  for (const auto& m : result.history)
    if (m.val_loss < best) {
      best = m.val_loss;
      best_at = m.epoch;
    }
  CHECK(result.best_epoch == best_at);
  CHECK(result.best_val_loss == best);

  // the checkpoint holds exactly the returned parameters and config
  const auto [ckpt_params, ckpt_cfg] = ts::load_checkpoint(out / "best.ckpt");
  CHECK(ckpt_cfg == result.model);
  CHECK(ckpt_cfg == ts::model_config(cfg));
  CHECK(params_equal(ckpt_params, result.best_params));
}

TEST_CASE("deterministic runs repeat bit for bit") {
  TempDir dir;
  const auto data = dir / "data";
  tsupport::make_block_dataset(data, 8, 8, 9);

  auto cfg = tiny_cfg(data, dir / "out1");
  cfg.deterministic = true;
  cfg.lr = 1e-2;
  const auto r1 = ts::train<float>(cfg);

  cfg.out_dir = dir / "out2";
  const auto r2 = ts::train<float>(cfg);

  REQUIRE(r1.history.size() == r2.history.size());
  for (size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
    CHECK(r1.history[i].train_acc == r2.history[i].train_acc);
    CHECK(r1.history[i].train_iou == r2.history[i].train_iou);
    CHECK(r1.history[i].val_loss == r2.history[i].val_loss);
  }
  CHECK(tsupport::read_file_bytes(dir / "out1" / "best.ckpt") ==
        tsupport::read_file_bytes(dir / "out2" / "best.ckpt"));

  cfg.out_dir = dir / "out3";
  cfg.seed = cfg.seed + 1;
  const auto r3 = ts::train<float>(cfg);
  CHECK(r3.history.front().train_loss != r1.history.front().train_loss);
}

TEST_CASE("early stopping halts nine epochs past the best") {
  TempDir dir;
  const auto data = dir / "data";
  const auto out = dir / "out";
  tsupport::make_block_dataset(data, 6, 8, 2);

  auto cfg = tiny_cfg(data, out);
  cfg.base_width = 1;
  cfg.max_epochs = 60;
  cfg.lr = 1e-4;

  ts::TrainHooks<float> hooks;
  hooks.val_loss_override = [](int64_t epoch, double) {
    return epoch <= 26 ? std::exp(-static_cast<double>(epoch)) : 1.0;
  };
  const auto result = ts::train<float>(cfg, hooks);

  CHECK(result.history.size() == 35);
  CHECK(result.best_epoch == 26);
  CHECK(result.best_val_loss == std::exp(-26.0));

  const auto rows = ts::read_metrics_csv(out / "metrics.csv");
  REQUIRE(rows.size() == 35);
  CHECK(rows[25].val_loss == doctest::Approx(std::exp(-26.0)));
  CHECK(rows[34].val_loss == doctest::Approx(1.0));

  // the checkpoint snapshots epoch 26, not the final state
  const auto [ckpt_params, ckpt_cfg] = ts::load_checkpoint(out / "best.ckpt");
  CHECK(params_equal(ckpt_params, result.best_params));
}

TEST_CASE("a stop request ends training after its epoch") {
  TempDir dir;
  const auto data = dir / "data";
  tsupport::make_block_dataset(data, 6, 8, 3);

  auto cfg = tiny_cfg(data, dir / "out");
  cfg.max_epochs = 50;

  ts::TrainHooks<float> hooks;
  hooks.stop_request = [](const ts::EpochMetrics& m) { return m.epoch == 2; };
  const auto result = ts::train<float>(cfg, hooks);
  CHECK(result.history.size() == 2);
  CHECK(std::filesystem::exists(dir / "out" / "best.ckpt"));
}

TEST_CASE("all-nan validation falls back to the final parameters") {
  TempDir dir;
  const auto data = dir / "data";
  const auto out = dir / "out";
  tsupport::make_block_dataset(data, 6, 8, 4);

  auto cfg = tiny_cfg(data, out);
  cfg.patience = 2;
  cfg.max_epochs = 10;

  ts::TrainHooks<float> hooks;
  hooks.val_loss_override = [](int64_t, double) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  const auto result = ts::train<float>(cfg, hooks);
  CHECK(result.history.size() == 2);  // patience exhausts with no improvement
  CHECK(result.best_epoch == 2);
  CHECK(std::isnan(result.best_val_loss));
  const auto [ckpt_params, ckpt_cfg] = ts::load_checkpoint(out / "best.ckpt");
  CHECK(params_equal(ckpt_params, result.best_params));
}

TEST_CASE("zero parameters give closed-form evaluation metrics") {
  TempDir dir;
  const auto data = dir / "data";
  tsupport::make_block_dataset(data, 6, 16, 6);
  const auto manifest = ts::scan_dataset(data);

  ts::UNetConfig model;
  model.in_channels = 3;
  model.out_channels = 1;
  model.depth = 2;
  model.base_width = 4;
  model.img_size = 16;
  ts::ParamStore<float> zeros;
  for (const auto& [name, shape] : ts::param_shapes(model))
    zeros.emplace(name, ts::TensorT<float>::zeros(shape));

  // all logits are 0: probability one half everywhere, which thresholds
  // positive, so accuracy equals the foreground fraction exactly
  int64_t fg = 0, total = 0;
  for (const auto& e : manifest.entries) {
    const auto mask = ts::load_image(e.mask_path);
    for (uint16_t v : mask.pixels) fg += v >= 128 ? 1 : 0;
    total += static_cast<int64_t>(mask.pixels.size());
  }

  const auto m = ts::evaluate<float>(zeros, model, manifest, 6, 16);
  CHECK(m.loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  CHECK(m.accuracy == doctest::Approx(static_cast<double>(fg) / static_cast<double>(total))
                          .epsilon(1e-12));
  CHECK(m.iou == doctest::Approx((static_cast<double>(fg) + 1e-6) /
                                 (static_cast<double>(total) + 1e-6))
                     .epsilon(1e-12));
}

TEST_CASE("evaluate validates its inputs") {
  ts::UNetConfig model;
  model.img_size = 8;
  model.depth = 1;
  model.base_width = 1;
  ts::ParamStore<float> zeros;
  for (const auto& [name, shape] : ts::param_shapes(model))
    zeros.emplace(name, ts::TensorT<float>::zeros(shape));

  ts::Manifest empty;
  try {
    ts::evaluate<float>(zeros, model, empty, 4, 8);
    FAIL("expected throw");
  } catch (const ts::Error& e) {
    CHECK(e.kind() == ts::ErrorKind::dataset);
  }

  ts::Manifest one;
  one.entries.push_back({"a", "x.png", "y.png"});
  try {
    ts::evaluate<float>(zeros, model, one, 0, 8);
    FAIL("expected throw");
  } catch (const ts::Error& e) {
    CHECK(e.kind() == ts::ErrorKind::invalid_argument);
  }
}

TEST_CASE("predict keeps friendly extents and resizes the rest") {
  TempDir dir;
  ts::UNetConfig model;
  model.in_channels = 3;
  model.out_channels = 1;
  model.depth = 1;
  model.base_width = 2;
  model.img_size = 8;
  ts::ParamStore<float> zeros;
  for (const auto& [name, shape] : ts::param_shapes(model))
    zeros.emplace(name, ts::TensorT<float>::zeros(shape));

  // 6x4 divides by 2: extents survive
  tsupport::write_ppm8(dir / "even.ppm", 4, 6, std::vector<uint8_t>(4 * 6 * 3, 90));
  ts::predict_mask<float>(zeros, model, dir / "even.ppm", dir / "even_mask.png");
  const auto even = ts::load_image(dir / "even_mask.png");
  CHECK(even.width == 4);
  CHECK(even.height == 6);
  // half probability thresholds positive everywhere
  for (uint16_t v : even.pixels) CHECK(v == 255);

  // 5x4 does not divide: fall back to the training extent
  tsupport::write_ppm8(dir / "odd.ppm", 5, 4, std::vector<uint8_t>(5 * 4 * 3, 90));
  ts::predict_mask<float>(zeros, model, dir / "odd.ppm", dir / "odd_mask.png");
  const auto odd = ts::load_image(dir / "odd_mask.png");
  CHECK(odd.width == 8);
  CHECK(odd.height == 8);

  // grayscale input replicates; pgm output encodes by extension
  tsupport::write_pgm8(dir / "gray.pgm", 4, 4, std::vector<uint8_t>(16, 90));
  ts::predict_mask<float>(zeros, model, dir / "gray.pgm", dir / "gray_mask.pgm");
  const auto gray = ts::load_image(dir / "gray_mask.pgm");
  CHECK(gray.width == 4);
  CHECK(gray.height == 4);
  CHECK(gray.channels == 1);

  // 16-bit sources are refused
  tsupport::write_pgm16(dir / "deep.pgm", 4, 4, std::vector<uint16_t>(16, 900));
  try {
    ts::predict_mask<float>(zeros, model, dir / "deep.pgm", dir / "deep_mask.png");
    FAIL("expected throw");
  } catch (const ts::Error& e) {
    CHECK(e.kind() == ts::ErrorKind::format);
  }
}
