#include <cmath>
#include <vector>

#include "core/gradcheck.hpp"
#include "core/kernels.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using ts::Tape;
using ts::TensorT;
using ts::Var;

TEST_CASE("bce matches closed forms") {
  Tape<double> tape;
  auto z = tape.leaf(TensorT<double>::from_values({4}, {0, 0, 2, -2}));
  const auto y = TensorT<double>::from_values({4}, {0, 1, 1, 0});
  auto loss = ts::bce_with_logits(tape, z, y);
  const double expect =
      (std::log(2.0) + std::log(2.0) + std::log1p(std::exp(-2.0)) + std::log1p(std::exp(-2.0))) / 4.0;
  CHECK(tape.value(loss).data[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("bce is finite at extreme logits") {
  Tape<double> tape;
  auto z = tape.leaf(TensorT<double>::from_values({2}, {1000, -1000}));
  const auto y = TensorT<double>::from_values({2}, {0, 1});
  auto loss = ts::bce_with_logits(tape, z, y);
  CHECK(tape.value(loss).data[0] == doctest::Approx(1000.0));
  CHECK(std::isfinite(tape.value(loss).data[0]));

  Tape<float> tf;
  auto zf = tf.leaf(TensorT<float>::from_values({2}, {200.0f, -200.0f}));
  const auto yf = TensorT<float>::from_values({2}, {0.0f, 1.0f});
  CHECK(std::isfinite(tf.value(ts::bce_with_logits(tf, zf, yf)).data[0]));
}

TEST_CASE("bce rejects non-binary targets") {
  Tape<double> tape;
  auto z = tape.leaf(TensorT<double>::zeros({3}));
  try {
    ts::bce_with_logits(tape, z, TensorT<double>::from_values({3}, {0, 0.5, 1}));
    FAIL("expected throw");
  } catch (const ts::Error& e) {
    CHECK(e.kind() == ts::ErrorKind::contract);
  }
  // shape mismatch
  CHECK_THROWS_AS(ts::bce_with_logits(tape, z, TensorT<double>::zeros({4})), ts::Error);
}

TEST_CASE("bce backward is (sigmoid(z) - y) / n") {
  Tape<double> tape;
  const std::vector<double> zs{-3, -0.7, 0, 1.2, 5};
  const std::vector<double> ys{0, 1, 1, 0, 1};
  auto z = tape.leaf(TensorT<double>::from_values({5}, std::vector<double>(zs)));
  auto loss = ts::bce_with_logits(tape, z, TensorT<double>::from_values({5}, std::vector<double>(ys)));
  tape.backward(loss);
  for (size_t i = 0; i < zs.size(); ++i) {
    const double expect = (ts::sigmoid_scalar(zs[i]) - ys[i]) / 5.0;
    CHECK(tape.grad(z).data[i] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("bce gradient passes the finite-difference check") {
  ts::SplitMix64 r(31);
  auto z0 = TensorT<double>::zeros({3, 4});
  auto y = TensorT<double>::zeros({3, 4});
  for (size_t i = 0; i < z0.data.size(); ++i) {
    z0.data[i] = r.uniform() * 6.0 - 3.0;
    y.data[i] = r.uniform() < 0.5 ? 0.0 : 1.0;
  }
  ts::ScalarFn<double> f = [&](Tape<double>& t, Var<double> z) {
    return ts::bce_with_logits(t, z, y);
  };
  CHECK(ts::grad_check(f, z0, 1e-6) < 1e-9);
}

TEST_CASE("bce_mean equals the taped loss") {
  ts::SplitMix64 r(32);
  auto z = TensorT<double>::zeros({17});
  auto y = TensorT<double>::zeros({17});
  for (size_t i = 0; i < z.data.size(); ++i) {
    z.data[i] = r.uniform() * 8.0 - 4.0;
    y.data[i] = r.uniform() < 0.5 ? 0.0 : 1.0;
  }
  Tape<double> tape;
  auto taped = ts::bce_with_logits(tape, tape.leaf(z), y);
  CHECK(ts::bce_mean(z, y) == tape.value(taped).data[0]);
}

TEST_CASE("accuracy and iou equal the counting oracle on random pairs") {
  ts::SplitMix64 r(33);
  for (int pair = 0; pair < 100; ++pair) {
    auto probs = TensorT<double>::zeros({16, 16});
    auto target = TensorT<double>::zeros({16, 16});
    for (size_t i = 0; i < probs.data.size(); ++i) {
      probs.data[i] = r.uniform();
      target.data[i] = r.uniform() < 0.5 ? 0.0 : 1.0;
    }
    CHECK(ts::pixel_accuracy(probs, target) == tsupport::oracle_accuracy(probs, target, 0.5));
    CHECK(ts::iou(probs, target) == tsupport::oracle_iou(probs, target, 0.5, 1e-6));
  }
}

TEST_CASE("metric edge cases") {
  const auto zeros = TensorT<double>::zeros({4});
  const auto ones = TensorT<double>::ones({4});
  CHECK(ts::iou(zeros, zeros) == 1.0);                    // empty vs empty
  CHECK(ts::iou(ones, ones) == 1.0);
  CHECK(ts::iou(zeros, ones) == doctest::Approx(1e-6 / (4.0 + 1e-6)));
  CHECK(ts::pixel_accuracy(zeros, zeros) == 1.0);
  CHECK(ts::pixel_accuracy(zeros, ones) == 0.0);

  // a prediction exactly at the threshold counts as positive
  const auto at_half = TensorT<double>::from_values({2}, {0.5, 0.49999});
  const auto t10 = TensorT<double>::from_values({2}, {1, 0});
  CHECK(ts::pixel_accuracy(at_half, t10) == 1.0);
  CHECK(ts::iou(at_half, t10) == doctest::Approx((1.0 + 1e-6) / (1.0 + 1e-6)));
}

TEST_CASE("metrics work identically for float tensors") {
  ts::SplitMix64 r(34);
  auto probs = TensorT<float>::zeros({64});
  auto target = TensorT<float>::zeros({64});
  for (size_t i = 0; i < probs.data.size(); ++i) {
    probs.data[i] = static_cast<float>(r.uniform());
    target.data[i] = r.uniform() < 0.5 ? 0.0f : 1.0f;
  }
  CHECK(ts::pixel_accuracy(probs, target) == tsupport::oracle_accuracy(probs, target, 0.5));
  CHECK(ts::iou(probs, target) == tsupport::oracle_iou(probs, target, 0.5, 1e-6));
}
