#pragma once

#include <functional>

#include "core/tape.hpp"

namespace ts {

// A differentiable scalar-valued function of one tensor. Must be pure: called
// repeatedly on perturbed copies of the input.
template <class T>
using ScalarFn = std::function<Var<T>(Tape<T>&, Var<T>)>;

// Central-difference check of reverse-mode gradients. Returns
//   max_i |analytic_i - cd_i| / max(1, |cd_i|)
// over all input elements, with cd the (f(x+eps) - f(x-eps)) / (2 eps)
// estimate.
template <class T>
double grad_check(const ScalarFn<T>& f, const TensorT<T>& x, double eps);

extern template double grad_check<float>(const ScalarFn<float>&, const TensorT<float>&, double);
extern template double grad_check<double>(const ScalarFn<double>&, const TensorT<double>&, double);

}  // namespace ts
