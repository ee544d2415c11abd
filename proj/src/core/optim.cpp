#include "core/optim.hpp"

#include <cmath>
#include <iostream>

namespace ts {

template <class T>
void adam_step(ParamStore<T>& params, const ParamStore<T>& grads, AdamState<T>& state) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (auto& [name, theta] : params) {
    auto git = grads.find(name);
    if (git == grads.end())
      fail(ErrorKind::shape, "adam_step: no gradient for parameter " + name);
    const TensorT<T>& g = git->second;
    if (!g.same_shape(theta))
      fail(ErrorKind::shape, "adam_step: gradient shape " + shape_str(g.shape) +
                                 " does not match parameter " + name + " " +
                                 shape_str(theta.shape));
    auto mit = state.m.find(name);
    if (mit == state.m.end())
      mit = state.m.emplace(name, TensorT<T>::zeros(theta.shape)).first;
    auto vit = state.v.find(name);
    if (vit == state.v.end())
      vit = state.v.emplace(name, TensorT<T>::zeros(theta.shape)).first;
    TensorT<T>& m = mit->second;
    TensorT<T>& v = vit->second;
    if (!m.same_shape(theta) || !v.same_shape(theta))
      fail(ErrorKind::shape, "adam_step: stale state shape for parameter " + name);
    for (size_t i = 0; i < theta.data.size(); ++i) {
      const double gi = static_cast<double>(g.data[i]);
      const double mi = state.beta1 * static_cast<double>(m.data[i]) + (1.0 - state.beta1) * gi;
      const double vi = state.beta2 * static_cast<double>(v.data[i]) + (1.0 - state.beta2) * gi * gi;
      m.data[i] = static_cast<T>(mi);
      v.data[i] = static_cast<T>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      theta.data[i] = static_cast<T>(static_cast<double>(theta.data[i]) -
                                     state.lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

template <class T>
StopDecision early_stop_update(EarlyStopState<T>& state, int64_t epoch,
                               double val_loss, const ParamStore<T>& current) {
  if (std::isnan(val_loss))
    std::cerr << "warning: validation loss is NaN at epoch " << epoch
              << ", treating as no improvement\n";
  if (val_loss < state.best_loss) {
    state.best_loss = val_loss;
    state.best_epoch = epoch;
    state.epochs_since_improvement = 0;
    state.best_params = current;
    return StopDecision::proceed;
  }
  state.epochs_since_improvement += 1;
  return state.epochs_since_improvement >= state.patience ? StopDecision::stop
                                                          : StopDecision::proceed;
}

#define TS_OPTIM_DEF(T)                                                       \
  template void adam_step<T>(ParamStore<T>&, const ParamStore<T>&, AdamState<T>&); \
  template StopDecision early_stop_update<T>(EarlyStopState<T>&, int64_t, double, const ParamStore<T>&);
TS_OPTIM_DEF(float)
TS_OPTIM_DEF(double)
#undef TS_OPTIM_DEF

}  // namespace ts
