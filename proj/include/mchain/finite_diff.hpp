#pragma once

#include <functional>

#include "mchain/tensor.hpp"

namespace mchain {

using ScalarFn = std::function<double(const Tensor&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every element
/// of x. Throws NumericError if f is non-finite at any probe point.
Tensor finite_difference_grad(const ScalarFn& f, const Tensor& x, double h = 1e-6);

/// ||a - b|| / max(||a||, ||b||), or 0 when both norms are below 1e-12.
double relative_error(const Tensor& a, const Tensor& b);

}  // namespace mchain
