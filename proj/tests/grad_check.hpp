// SPDX-License-Identifier: Apache-2.0
#pragma once

// Finite-difference gradient checking shared by the unit and acceptance suites.

#include <functional>
#include <vector>

#include "wakavt/numerics/finite_diff.hpp"
#include "wakavt/numerics/ops.hpp"
#include "wakavt/numerics/parameter_store.hpp"

namespace wakavt::test_support {

using numerics::Tensor;
using numerics::Var;

/// Worst relative error between backward() and central differences over
/// every leaf in `leaves`, where `loss` rebuilds the scalar from them.
/// At most `max_coords` randomly chosen entries per leaf are probed.
inline double max_grad_error(std::vector<Var> leaves, const std::function<Var()>& loss,
                             numerics::Rng& rng, std::size_t max_coords = 0, double h = 1e-5) {
  for (auto& l : leaves) l.node()->grad.fill(0.0);
  numerics::backward(loss());
  double worst = 0.0;
  auto eval = [&] {
    numerics::NoGradGuard guard;
    return loss().value().item();
  };
  for (auto& l : leaves) {
    Tensor& value = l.node()->value;
    std::vector<std::size_t> idx;
    if (max_coords == 0 || max_coords >= value.size()) {
      for (std::size_t i = 0; i < value.size(); ++i) idx.push_back(i);
    } else {
      for (std::size_t i = 0; i < max_coords; ++i) idx.push_back(rng.uniform_int(value.size()));
    }
    std::vector<double> analytic;
    for (std::size_t i : idx) analytic.push_back(l.node()->grad[i]);
    auto numeric = numerics::finite_diff_inplace(eval, value, idx, h);
    worst = std::max(worst, numerics::relative_error(analytic, numeric));
  }
  return worst;
}

inline Tensor random_tensor(numerics::Shape shape, numerics::Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

}  // namespace wakavt::test_support
