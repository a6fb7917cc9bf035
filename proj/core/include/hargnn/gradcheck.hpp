#pragma once

#include <functional>
#include <vector>

#include "hargnn/tensor.hpp"

namespace hargnn {

/// Compares reverse-mode gradients of a scalar function with central
/// differences. Returns max over coordinates of
/// |analytic - numeric| / max(1, |analytic|).
///
/// Coordinates of `x` closer than 10·eps to zero are nudged off zero first so
/// that the difference stencil does not straddle a ReLU kink at the input.
double gradient_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps = 1e-5);

/// Same check over every coordinate of `params` for a closure that rebuilds
/// the scalar from them. Parameter values are restored on return.
double gradient_check(const std::function<Tensor()>& f, std::vector<Tensor> params, double eps = 1e-5);

}  // namespace hargnn
