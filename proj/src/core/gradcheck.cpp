#include "core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ts {

namespace {

template <class T>
double eval_scalar(const ScalarFn<T>& f, const TensorT<T>& x) {
  Tape<T> tape;
  Var<T> vx = tape.leaf(x);
  Var<T> y = f(tape, vx);
  const TensorT<T>& yv = tape.value(y);
  if (yv.numel() != 1)
    fail(ErrorKind::contract, "grad_check requires a scalar-valued function");
  return static_cast<double>(yv.data[0]);
}

}  // namespace

template <class T>
double grad_check(const ScalarFn<T>& f, const TensorT<T>& x, double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::invalid_argument, "grad_check: eps must be positive");
  TensorT<T> analytic;
  {
    Tape<T> tape;
    Var<T> vx = tape.leaf(x);
    Var<T> y = f(tape, vx);
    if (tape.value(y).numel() != 1)
      fail(ErrorKind::contract, "grad_check requires a scalar-valued function");
    tape.backward(y);
    analytic = tape.grad(vx);
  }
  double worst = 0.0;
  TensorT<T> probe = x;
  for (size_t i = 0; i < x.data.size(); ++i) {
    const double base = static_cast<double>(x.data[i]);
    probe.data[i] = static_cast<T>(base + eps);
    const double up = eval_scalar(f, probe);
    probe.data[i] = static_cast<T>(base - eps);
    const double down = eval_scalar(f, probe);
    probe.data[i] = x.data[i];
    const double cd = (up - down) / (2.0 * eps);
    const double err = std::abs(static_cast<double>(analytic.data[i]) - cd) /
                       std::max(1.0, std::abs(cd));
    worst = std::max(worst, err);
  }
  return worst;
}

template double grad_check<float>(const ScalarFn<float>&, const TensorT<float>&, double);
template double grad_check<double>(const ScalarFn<double>&, const TensorT<double>&, double);

}  // namespace ts
