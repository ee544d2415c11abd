#include "core/tensor.hpp"

#include <sstream>

namespace ts {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_extents(const Shape& shape) {
  for (int64_t d : shape) {
    if (d < 1)
      fail(ErrorKind::invalid_argument,
           "tensor extents must be positive, got " + shape_str(shape));
  }
}

}  // namespace

template <class T>
TensorT<T> TensorT<T>::full(Shape shape, T value) {
  check_extents(shape);
  TensorT<T> t;
  t.data.assign(static_cast<size_t>(shape_numel(shape)), value);
  t.shape = std::move(shape);
  return t;
}

template <class T>
TensorT<T> TensorT<T>::from_values(Shape shape, std::vector<T> values) {
  check_extents(shape);
  if (shape_numel(shape) != static_cast<int64_t>(values.size()))
    fail(ErrorKind::invalid_argument,
         "got " + std::to_string(values.size()) + " values for shape " + shape_str(shape));
  TensorT<T> t;
  t.shape = std::move(shape);
  t.data = std::move(values);
  return t;
}

template struct TensorT<float>;
template struct TensorT<double>;

}  // namespace ts
