#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace ts {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major n-d array, last axis fastest. Image batches are N x C x H x W.
// No views, no strides; every tensor owns its buffer.
template <class T>
struct TensorT {
  Shape shape;
  std::vector<T> data;

  TensorT() = default;

  static TensorT full(Shape shape, T value);
  static TensorT zeros(Shape shape) { return full(std::move(shape), T(0)); }
  static TensorT ones(Shape shape) { return full(std::move(shape), T(1)); }
  static TensorT from_values(Shape shape, std::vector<T> values);
  static TensorT scalar(T value) { return from_values({1}, {value}); }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int64_t rank() const { return static_cast<int64_t>(shape.size()); }
  int64_t dim(int64_t axis) const { return shape[static_cast<size_t>(axis)]; }
  bool same_shape(const TensorT& other) const { return shape == other.shape; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& at4(int64_t n, int64_t c, int64_t y, int64_t x) {
    return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + y) * shape[3] + x)];
  }
  const T& at4(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + y) * shape[3] + x)];
  }
};

extern template struct TensorT<float>;
extern template struct TensorT<double>;

using Tensor = TensorT<float>;

template <class U, class T>
TensorT<U> tensor_cast(const TensorT<T>& t) {
  TensorT<U> out;
  out.shape = t.shape;
  out.data.reserve(t.data.size());
  for (T v : t.data) out.data.push_back(static_cast<U>(v));
  return out;
}

}  // namespace ts
