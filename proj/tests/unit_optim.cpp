#include <cmath>
#include <limits>
#include <vector>

#include "core/optim.hpp"
#include "core/rng.hpp"
#include "doctest.h"

using ts::AdamState;
using ts::EarlyStopState;
using ts::ParamStore;
using ts::StopDecision;
using ts::TensorT;

namespace {

// Update equations re-implemented standalone as the reference trajectory.
struct ScalarAdamRef {
  double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-7;
  double m = 0.0, v = 0.0;
  int64_t t = 0;

  double step(double theta, double g) {
    t += 1;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / (1.0 - std::pow(b1, static_cast<double>(t)));
    const double vhat = v / (1.0 - std::pow(b2, static_cast<double>(t)));
    return theta - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

}  // namespace

TEST_CASE("first adam step matches the hand-evaluated closed form") {
  ParamStore<double> params;
  params.emplace("w", TensorT<double>::from_values({1}, {0.0}));
  ParamStore<double> grads;
  grads.emplace("w", TensorT<double>::from_values({1}, {10.0}));
  AdamState<double> st;

  ts::adam_step(params, grads, st);
  // mhat = 10, vhat = 100 exactly after one step
  const double expect = 0.0 - 0.001 * 10.0 / (std::sqrt(100.0) + 1e-7);
  CHECK(std::abs(params.at("w").data[0] - expect) < 1e-12);
  CHECK(st.t == 1);
}

TEST_CASE("zero gradient moves nothing") {
  ParamStore<double> params;
  params.emplace("w", TensorT<double>::from_values({3}, {1.5, -2.0, 0.75}));
  ParamStore<double> grads;
  grads.emplace("w", TensorT<double>::zeros({3}));
  AdamState<double> st;
  ts::adam_step(params, grads, st);
  ts::adam_step(params, grads, st);
  CHECK(params.at("w").data == std::vector<double>{1.5, -2.0, 0.75});
}

TEST_CASE("multi-step trajectory follows the reference equations") {
  ts::SplitMix64 r(77);
  ParamStore<double> params;
  params.emplace("w", TensorT<double>::from_values({4}, {0.3, -1.2, 2.0, 0.0}));
  AdamState<double> st;

  std::vector<ScalarAdamRef> refs(4);
  std::vector<double> theta{0.3, -1.2, 2.0, 0.0};

  for (int step = 0; step < 7; ++step) {
    ParamStore<double> grads;
    auto g = TensorT<double>::zeros({4});
    for (auto& v : g.data) v = r.uniform() * 4.0 - 2.0;
    grads.emplace("w", g);
    ts::adam_step(params, grads, st);
    for (size_t i = 0; i < 4; ++i) theta[i] = refs[i].step(theta[i], g.data[i]);
    for (size_t i = 0; i < 4; ++i)
      CHECK(params.at("w").data[i] == doctest::Approx(theta[i]).epsilon(1e-14));
  }
  CHECK(st.t == 7);
}

TEST_CASE("constant gradient descends by about lr per step") {
  ParamStore<double> params;
  params.emplace("w", TensorT<double>::from_values({1}, {0.0}));
  AdamState<double> st;
  ParamStore<double> grads;
  grads.emplace("w", TensorT<double>::from_values({1}, {-3.0}));
  double prev = 0.0;
  for (int i = 0; i < 5; ++i) {
    ts::adam_step(params, grads, st);
    const double delta = params.at("w").data[0] - prev;
    // mhat/sqrt(vhat) = g/|g| for a constant gradient
    CHECK(delta == doctest::Approx(0.001).epsilon(1e-6));
    prev = params.at("w").data[0];
  }
}

TEST_CASE("float parameters update through double arithmetic") {
  ParamStore<float> params;
  params.emplace("w", TensorT<float>::from_values({1}, {0.0f}));
  ParamStore<float> grads;
  grads.emplace("w", TensorT<float>::from_values({1}, {10.0f}));
  AdamState<float> st;
  ts::adam_step(params, grads, st);
  const double expect = -0.001 * 10.0 / (std::sqrt(100.0) + 1e-7);
  CHECK(params.at("w").data[0] == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("adam rejects missing or mismatched gradients") {
  ParamStore<double> params;
  params.emplace("w", TensorT<double>::zeros({2}));
  AdamState<double> st;

  ParamStore<double> empty;
  CHECK_THROWS_AS(ts::adam_step(params, empty, st), ts::Error);

  ParamStore<double> wrong;
  wrong.emplace("w", TensorT<double>::zeros({3}));
  try {
    ts::adam_step(params, wrong, st);
    FAIL("expected throw");
  } catch (const ts::Error& e) {
    CHECK(e.kind() == ts::ErrorKind::shape);
  }
}

TEST_CASE("improvement resets patience and snapshots parameters") {
  EarlyStopState<double> es;
  es.patience = 3;
  ParamStore<double> params;
  params.emplace("w", TensorT<double>::from_values({1}, {1.0}));

  CHECK(ts::early_stop_update(es, 1, 0.5, params) == StopDecision::proceed);
  CHECK(es.best_epoch == 1);
  CHECK(es.best_loss == 0.5);

  params.at("w").data[0] = 2.0;
  CHECK(ts::early_stop_update(es, 2, 0.4, params) == StopDecision::proceed);
  CHECK(es.best_epoch == 2);
  // snapshot is a deep copy of the epoch-2 parameters
  params.at("w").data[0] = 99.0;
  CHECK(es.best_params.at("w").data[0] == 2.0);

  CHECK(ts::early_stop_update(es, 3, 0.45, params) == StopDecision::proceed);
  CHECK(ts::early_stop_update(es, 4, 0.45, params) == StopDecision::proceed);
  CHECK(es.epochs_since_improvement == 2);
  CHECK(ts::early_stop_update(es, 5, 0.45, params) == StopDecision::stop);
  CHECK(es.best_epoch == 2);
}

TEST_CASE("equal loss is not an improvement") {
  EarlyStopState<double> es;
  es.patience = 1;
  ParamStore<double> params;
  CHECK(ts::early_stop_update(es, 1, 1.0, params) == StopDecision::proceed);
  CHECK(ts::early_stop_update(es, 2, 1.0, params) == StopDecision::stop);
  CHECK(es.best_epoch == 1);
}

TEST_CASE("the documented 35-epoch stop: minimum at 26, patience 9") {
  EarlyStopState<double> es;
  es.patience = 9;
  ParamStore<double> params;
  int64_t epochs_run = 0;
  for (int64_t e = 1; e <= 100; ++e) {
    const double loss = e <= 26 ? 1.0 / static_cast<double>(e) : 1.0;
    epochs_run = e;
    if (ts::early_stop_update(es, e, loss, params) == StopDecision::stop) break;
  }
  CHECK(epochs_run == 35);
  CHECK(es.best_epoch == 26);
  CHECK(es.best_loss == doctest::Approx(1.0 / 26.0));
}

TEST_CASE("nan loss never improves") {
  EarlyStopState<double> es;
  es.patience = 2;
  ParamStore<double> params;
  params.emplace("w", TensorT<double>::from_values({1}, {7.0}));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(ts::early_stop_update(es, 1, nan, params) == StopDecision::proceed);
  CHECK(es.best_epoch == -1);
  CHECK(es.epochs_since_improvement == 1);
  CHECK(ts::early_stop_update(es, 2, 0.3, params) == StopDecision::proceed);
  CHECK(es.best_epoch == 2);
  CHECK(ts::early_stop_update(es, 3, nan, params) == StopDecision::proceed);
  CHECK(ts::early_stop_update(es, 4, nan, params) == StopDecision::stop);
}
