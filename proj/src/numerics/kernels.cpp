// SPDX-License-Identifier: Apache-2.0
#include "wakavt/numerics/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace wakavt::numerics::kernels {

void matmul(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
            std::size_t n, bool accumulate) {
  if (!accumulate) std::memset(out, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_tn(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  if (!accumulate) std::memset(out, 0, k * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* orow = out + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* out, std::size_t m, std::size_t n,
               std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double v = dot(arow, b + p * n, n);
      if (accumulate) {
        out[i * k + p] += v;
      } else {
        out[i * k + p] = v;
      }
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void softmax_strided(double* x, std::size_t len, std::size_t stride) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, x[i * stride]);
  if (mx == -std::numeric_limits<double>::infinity()) {
    throw FullyMaskedError("softmax over a fully masked row");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    double& v = x[i * stride];
    v = (v == -std::numeric_limits<double>::infinity()) ? 0.0 : std::exp(v - mx);
    total += v;
  }
  const double inv = 1.0 / total;
  for (std::size_t i = 0; i < len; ++i) x[i * stride] *= inv;
}

void log_softmax(std::span<double> x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, v);
  if (mx == -std::numeric_limits<double>::infinity()) {
    throw FullyMaskedError("log-softmax over a fully masked row");
  }
  double total = 0.0;
  for (double v : x) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  for (double& v : x) v -= lse;
}

double layer_norm_row(std::span<const double> in, std::span<const double> gamma,
                      std::span<const double> beta, double eps, std::span<double> out) {
  const std::size_t d = in.size();
  double mean = 0.0;
  for (double v : in) mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double v : in) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d);
  const double rstd = 1.0 / std::sqrt(var + eps);
  for (std::size_t i = 0; i < d; ++i) out[i] = (in[i] - mean) * rstd * gamma[i] + beta[i];
  return rstd;
}

}  // namespace wakavt::numerics::kernels
