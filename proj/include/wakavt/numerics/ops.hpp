// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "wakavt/numerics/autograd.hpp"
#include "wakavt/numerics/random.hpp"

// Differentiable tensor operations. Every op validates shapes and throws
// ShapeError on a contract violation.
namespace wakavt::numerics {

enum class Mode { Train, Infer };

// ---- linear algebra -------------------------------------------------------

/// a[m,k] @ b[k,n]
Var matmul(const Var& a, const Var& b);
/// x[..., d_in] @ w[d_in, d_out] + b[d_out], batched over leading axes.
Var linear(const Var& x, const Var& w, const Var& b);
Var linear(const Var& x, const Var& w);
Var transpose(const Var& a);

// ---- elementwise ----------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
/// x[m,n] + v[n] broadcast over rows.
Var add_row(const Var& x, const Var& v);
/// x + c where c is a non-differentiable tensor of the same shape (masks).
Var add_constant(const Var& x, const Tensor& c);

Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var relu(const Var& x);
Var exp(const Var& x);
Var square(const Var& x);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }

// ---- normalisation --------------------------------------------------------

/// Softmax along `axis`; -inf entries map to exactly 0. A reduction whose
/// entries are all -inf raises kernels::FullyMaskedError.
Var softmax(const Var& x, std::size_t axis);
/// Log-softmax along the last axis.
Var log_softmax(const Var& x);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

/// Inverted dropout. Identity in inference mode or when rate == 0.
Var dropout(const Var& x, double rate, Mode mode, Rng* rng);
/// Dropout with an explicit keep mask (1 = keep); survivors scaled by 1/(1-rate).
Var dropout_with_mask(const Var& x, double rate, std::span<const bool> keep);

// ---- structure ------------------------------------------------------------

Var slice_rows(const Var& x, std::size_t begin, std::size_t end);
Var slice_cols(const Var& x, std::size_t begin, std::size_t end);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
/// Rows of `table` selected by `ids`.
Var embedding(const Var& table, std::span<const int> ids);
/// Entries x[row, col] gathered into a vector.
Var pick(const Var& x, std::span<const std::pair<std::size_t, std::size_t>> coords);

// ---- reductions -----------------------------------------------------------

Var sum(const Var& x);
Var mean(const Var& x);

}  // namespace wakavt::numerics
