#include "core/metrics.hpp"

#include <cmath>
#include <memory>

namespace ts {

namespace {

template <class T>
void check_binary_targets(const TensorT<T>& targets) {
  for (T y : targets.data)
    if (!(y == T(0) || y == T(1)))
      fail(ErrorKind::contract, "targets must be exactly 0 or 1");
}

template <class T>
double bce_sum(const TensorT<T>& logits, const TensorT<T>& targets) {
  double acc = 0.0;
  for (size_t i = 0; i < logits.data.size(); ++i) {
    const double z = static_cast<double>(logits.data[i]);
    const double y = static_cast<double>(targets.data[i]);
    acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  return acc;
}

inline double sigmoid_d(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

template <class T>
double bce_mean(const TensorT<T>& logits, const TensorT<T>& targets) {
  if (logits.shape != targets.shape)
    fail(ErrorKind::shape, "bce: logits " + shape_str(logits.shape) +
                               " vs targets " + shape_str(targets.shape));
  check_binary_targets(targets);
  return bce_sum(logits, targets) / static_cast<double>(logits.numel());
}

template <class T>
Var<T> bce_with_logits(Tape<T>& tape, Var<T> logits, const TensorT<T>& targets) {
  const TensorT<T>& z = tape.value(logits);
  if (z.shape != targets.shape)
    fail(ErrorKind::shape, "bce: logits " + shape_str(z.shape) + " vs targets " +
                               shape_str(targets.shape));
  check_binary_targets(targets);
  const int64_t n = z.numel();
  TensorT<T> out = TensorT<T>::scalar(static_cast<T>(bce_sum(z, targets) / static_cast<double>(n)));
  auto tg = std::make_shared<TensorT<T>>(targets);
  const int32_t zid = logits.id;
  return tape.emplace("bce_with_logits", std::move(out), {zid},
                      [zid, tg, n](Tape<T>& t, int32_t self) {
                        const double g0 = static_cast<double>(t.upstream(self).data[0]);
                        const TensorT<T>& z2 = t.node_value(zid);
                        TensorT<T>& dz = t.grad_buf(zid);
                        const double inv = 1.0 / static_cast<double>(n);
                        for (size_t i = 0; i < dz.data.size(); ++i) {
                          const double s = sigmoid_d(static_cast<double>(z2.data[i]));
                          const double y = static_cast<double>(tg->data[i]);
                          dz.data[i] += static_cast<T>(g0 * (s - y) * inv);
                        }
                      });
}

template <class T>
double pixel_accuracy(const TensorT<T>& probs, const TensorT<T>& targets,
                      double threshold) {
  if (probs.shape != targets.shape)
    fail(ErrorKind::shape, "pixel_accuracy: probs " + shape_str(probs.shape) +
                               " vs targets " + shape_str(targets.shape));
  check_binary_targets(targets);
  int64_t correct = 0;
  for (size_t i = 0; i < probs.data.size(); ++i) {
    const bool pred = static_cast<double>(probs.data[i]) >= threshold;
    const bool truth = targets.data[i] == T(1);
    if (pred == truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.numel());
}

template <class T>
double iou(const TensorT<T>& probs, const TensorT<T>& targets, double threshold,
           double eps) {
  if (probs.shape != targets.shape)
    fail(ErrorKind::shape, "iou: probs " + shape_str(probs.shape) + " vs targets " +
                               shape_str(targets.shape));
  check_binary_targets(targets);
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < probs.data.size(); ++i) {
    const bool pred = static_cast<double>(probs.data[i]) >= threshold;
    const bool truth = targets.data[i] == T(1);
    if (pred && truth) ++inter;
    if (pred || truth) ++uni;
  }
  return (static_cast<double>(inter) + eps) / (static_cast<double>(uni) + eps);
}

#define TS_METRIC_DEF(T)                                                        \
  template Var<T> bce_with_logits<T>(Tape<T>&, Var<T>, const TensorT<T>&);      \
  template double bce_mean<T>(const TensorT<T>&, const TensorT<T>&);            \
  template double pixel_accuracy<T>(const TensorT<T>&, const TensorT<T>&, double); \
  template double iou<T>(const TensorT<T>&, const TensorT<T>&, double, double);
TS_METRIC_DEF(float)
TS_METRIC_DEF(double)
#undef TS_METRIC_DEF

}  // namespace ts
