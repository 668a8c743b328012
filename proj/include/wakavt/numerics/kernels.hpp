// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

// Raw dense kernels shared by the autograd ops and the incremental decoder.
namespace wakavt::numerics::kernels {

/// Raised by softmax when every entry of a reduction is -inf.
class FullyMaskedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// out[m,n] (+)= a[m,k] * b[k,n]
void matmul(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
            std::size_t n, bool accumulate = false);
// out[k,n] (+)= a[m,k]^T * b[m,n]
void matmul_tn(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate = false);
// out[m,k] (+)= a[m,n] * b[k,n]^T
void matmul_nt(const double* a, const double* b, double* out, std::size_t m, std::size_t n,
               std::size_t k, bool accumulate = false);

/// In-place max-stabilised softmax over a strided sequence of `len` entries.
void softmax_strided(double* x, std::size_t len, std::size_t stride);
inline void softmax(std::span<double> x) { softmax_strided(x.data(), x.size(), 1); }

/// In-place log-softmax; -inf entries stay -inf.
void log_softmax(std::span<double> x);

/// Normalises one row; returns the reciprocal standard deviation used.
double layer_norm_row(std::span<const double> in, std::span<const double> gamma,
                      std::span<const double> beta, double eps, std::span<double> out);

double dot(const double* a, const double* b, std::size_t n);

}  // namespace wakavt::numerics::kernels
