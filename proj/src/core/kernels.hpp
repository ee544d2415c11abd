#pragma once

#include <cmath>

#include "core/tape.hpp"

namespace ts {

enum class Padding { same, none };

struct ConvSpec {
  int64_t in_channels = 1;
  int64_t out_channels = 1;
  int64_t kernel = 3;
  int64_t stride = 1;
  Padding padding = Padding::same;
};

// 2-d cross-correlation over N x C x H x W with zero padding.
// weight is [out, in, k, k], bias is [out].
template <class T>
Var<T> conv2d(Tape<T>& tape, Var<T> input, Var<T> weight, Var<T> bias,
              const ConvSpec& spec);

// 2x2 window, stride 2. Ties resolve to the first element in row-major
// window order; the gradient is routed to that single element.
template <class T>
Var<T> maxpool2d(Tape<T>& tape, Var<T> input);

// Learned 2x stride-2 upsampling. weight is [in, out, 2, 2]; each input pixel
// scatters a weighted 2x2 block into the output, so spatial extents double.
template <class T>
Var<T> conv_transpose2d(Tape<T>& tape, Var<T> input, Var<T> weight);

// Channel concatenation of two N x C x H x W batches; a occupies the leading
// channels of the result.
template <class T>
Var<T> concat_channels(Tape<T>& tape, Var<T> a, Var<T> b);

template <class T>
Var<T> relu(Tape<T>& tape, Var<T> input);

template <class T>
Var<T> sigmoid(Tape<T>& tape, Var<T> input);

template <class T>
inline T sigmoid_scalar(T z) {
  if (z >= T(0)) {
    const T e = std::exp(-z);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// Elementwise sigmoid of a plain tensor, for paths that need probabilities
// without recording onto a tape.
template <class T>
TensorT<T> sigmoid_values(const TensorT<T>& logits);

#define TS_KERNEL_DECL(T)                                                          \
  extern template Var<T> conv2d<T>(Tape<T>&, Var<T>, Var<T>, Var<T>, const ConvSpec&); \
  extern template Var<T> maxpool2d<T>(Tape<T>&, Var<T>);                           \
  extern template Var<T> conv_transpose2d<T>(Tape<T>&, Var<T>, Var<T>);            \
  extern template Var<T> concat_channels<T>(Tape<T>&, Var<T>, Var<T>);             \
  extern template Var<T> relu<T>(Tape<T>&, Var<T>);                                \
  extern template Var<T> sigmoid<T>(Tape<T>&, Var<T>);                             \
  extern template TensorT<T> sigmoid_values<T>(const TensorT<T>&);
TS_KERNEL_DECL(float)
TS_KERNEL_DECL(double)
#undef TS_KERNEL_DECL

}  // namespace ts
