#pragma once

#include <cstdint>
#include <limits>

#include "core/unet.hpp"

namespace ts {

// Adam with per-parameter moment tensors. eps is added after the square
// root. The step count increments before bias correction, so the first call
// uses t = 1.
template <class T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
  int64_t t = 0;
  ParamStore<T> m, v;  // allocated on first step
};

template <class T>
void adam_step(ParamStore<T>& params, const ParamStore<T>& grads, AdamState<T>& state);

enum class StopDecision { proceed, stop };

template <class T>
struct EarlyStopState {
  double best_loss = std::numeric_limits<double>::infinity();
  int64_t best_epoch = -1;
  int64_t patience = 9;
  int64_t epochs_since_improvement = 0;
  ParamStore<T> best_params;
};

// Strict-improvement early stopping. An improving epoch snapshots the current
// parameters by deep copy; a NaN loss never counts as an improvement.
template <class T>
StopDecision early_stop_update(EarlyStopState<T>& state, int64_t epoch,
                               double val_loss, const ParamStore<T>& current);

#define TS_OPTIM_DECL(T)                                                       \
  extern template void adam_step<T>(ParamStore<T>&, const ParamStore<T>&, AdamState<T>&); \
  extern template StopDecision early_stop_update<T>(EarlyStopState<T>&, int64_t, double, const ParamStore<T>&);
TS_OPTIM_DECL(float)
TS_OPTIM_DECL(double)
#undef TS_OPTIM_DECL

}  // namespace ts
