// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "wakavt/attention/layers.hpp"
#include "wakavt/numerics/ops.hpp"
#include "wakavt/numerics/parameter_store.hpp"

namespace wakavt::latent {

using numerics::Tensor;
using numerics::Var;

/// Diagonal Gaussian N(mu, exp(logvar)).
struct DiagGaussian {
  Tensor mu;
  Tensor logvar;

  std::size_t dim() const { return mu.size(); }
};

/// Row-wise Gaussians, one per position: mu and logvar are [T, d_z].
struct GaussianRows {
  Var mu;
  Var logvar;

  std::size_t length() const { return mu.rows(); }
  std::size_t dim() const { return mu.cols(); }
  DiagGaussian at(std::size_t t) const;
};

/// Per-position distributions plus the sampled values z_{1:T}.
struct LatentSequence {
  GaussianRows dist;
  Var z;
};

/// Two-layer MLP with tanh hidden units.
struct MlpParams {
  Var w1, b1, w2, b2;

  std::size_t out_width() const { return w2.cols(); }
};

MlpParams make_mlp(numerics::ParameterStore& store, const std::string& prefix, std::size_t d_in,
                   std::size_t hidden, std::size_t d_out, numerics::Partition part,
                   numerics::Rng& rng);
Var mlp_forward(const Var& x, const MlpParams& p);

/// [mu, logvar] = MLP(o), split in half along the last axis.
GaussianRows project_gaussian(const Var& o, const MlpParams& p);

/// z = mu + exp(0.5 logvar) * noise.
Tensor reparameterize(const DiagGaussian& dist, const Tensor& noise);
Var reparameterize(const GaussianRows& dist, const Tensor& noise);

/// Closed-form KL(q || p) for diagonal Gaussians.
double kl_divergence(const DiagGaussian& q, const DiagGaussian& p);
/// Sum of row-wise KL(q_t || p_t) over all rows.
Var kl_divergence(const GaussianRows& q, const GaussianRows& p);

/// m_t = tanh(z_t W + o_t U) V; output LayerNorm(o_t + Dropout(m_t)).
struct FusionParams {
  Var w;  // [d_z, d]
  Var u;  // [d, d]
  Var v;  // [d, d]
  attention::LayerNormParams norm;
};

FusionParams make_fusion(numerics::ParameterStore& store, const std::string& prefix,
                         std::size_t d_z, std::size_t d, numerics::Partition part,
                         numerics::Rng& rng);
Var fuse_latent(const Var& z, const Var& o_p, const FusionParams& p,
                const attention::DropoutSpec& drop = {});

}  // namespace wakavt::latent
