// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>

#include "wakavt/numerics/tensor.hpp"

namespace wakavt::numerics {

/// Central-difference gradient of a scalar function at x:
/// (f(x + h e_i) - f(x - h e_i)) / 2h for every element i.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double h = 1e-5);

/// Central differences with respect to selected entries of a tensor that
/// `f` reads in place (e.g. a parameter). The tensor is restored afterwards.
std::vector<double> finite_diff_inplace(const std::function<double()>& f, Tensor& x,
                                        std::span<const std::size_t> indices, double h = 1e-5);

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace wakavt::numerics
