#pragma once

#include "core/tape.hpp"

namespace ts {

struct MetricTriple {
  double accuracy = 0.0;
  double loss = 0.0;
  double iou = 0.0;
};

// Mean binary cross-entropy evaluated directly on logits in the
// overflow-safe form  max(z, 0) - z y + log(1 + exp(-|z|)).
// Targets must be exactly 0 or 1.
template <class T>
Var<T> bce_with_logits(Tape<T>& tape, Var<T> logits, const TensorT<T>& targets);

// Same reduction without a tape, for evaluation passes.
template <class T>
double bce_mean(const TensorT<T>& logits, const TensorT<T>& targets);

// Fraction of pixels whose thresholded prediction matches the target.
// Predictions at exactly the threshold count as positive.
template <class T>
double pixel_accuracy(const TensorT<T>& probs, const TensorT<T>& targets,
                      double threshold = 0.5);

// Intersection over union of the thresholded prediction against the target,
// smoothed as (I + eps) / (U + eps); two empty masks score 1.
template <class T>
double iou(const TensorT<T>& probs, const TensorT<T>& targets,
           double threshold = 0.5, double eps = 1e-6);

#define TS_METRIC_DECL(T)                                                       \
  extern template Var<T> bce_with_logits<T>(Tape<T>&, Var<T>, const TensorT<T>&); \
  extern template double bce_mean<T>(const TensorT<T>&, const TensorT<T>&);     \
  extern template double pixel_accuracy<T>(const TensorT<T>&, const TensorT<T>&, double); \
  extern template double iou<T>(const TensorT<T>&, const TensorT<T>&, double, double);
TS_METRIC_DECL(float)
TS_METRIC_DECL(double)
#undef TS_METRIC_DECL

}  // namespace ts
