// SPDX-License-Identifier: Apache-2.0
#include "wakavt/latent/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace wakavt::latent {

namespace ops = numerics;
using numerics::ShapeError;
using numerics::shape_to_string;

DiagGaussian GaussianRows::at(std::size_t t) const {
  const std::size_t d = dim();
  Tensor m({d}), lv({d});
  for (std::size_t i = 0; i < d; ++i) {
    m[i] = mu.value().at(t, i);
    lv[i] = logvar.value().at(t, i);
  }
  return {std::move(m), std::move(lv)};
}

MlpParams make_mlp(numerics::ParameterStore& store, const std::string& prefix, std::size_t d_in,
                   std::size_t hidden, std::size_t d_out, numerics::Partition part,
                   numerics::Rng& rng) {
  return {store.add(prefix + ".w1", numerics::xavier_uniform(d_in, hidden, rng), part),
          store.add(prefix + ".b1", Tensor({hidden}, 0.0), part),
          store.add(prefix + ".w2", numerics::xavier_uniform(hidden, d_out, rng), part),
          store.add(prefix + ".b2", Tensor({d_out}, 0.0), part)};
}

Var mlp_forward(const Var& x, const MlpParams& p) {
  return ops::linear(ops::tanh(ops::linear(x, p.w1, p.b1)), p.w2, p.b2);
}

GaussianRows project_gaussian(const Var& o, const MlpParams& p) {
  const std::size_t width = p.out_width();
  if (width == 0 || width % 2 != 0) {
    throw std::invalid_argument("latent projection width " + std::to_string(width) +
                                " must be even (mu and logvar halves)");
  }
  Var out = mlp_forward(o, p);
  return {ops::slice_cols(out, 0, width / 2), ops::slice_cols(out, width / 2, width)};
}

Tensor reparameterize(const DiagGaussian& dist, const Tensor& noise) {
  if (dist.mu.size() != noise.size() || dist.logvar.size() != noise.size()) {
    throw ShapeError("reparameterize: noise " + shape_to_string(noise.shape()) +
                     " does not match mu " + shape_to_string(dist.mu.shape()));
  }
  Tensor z(dist.mu.shape());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = dist.mu[i] + std::exp(0.5 * dist.logvar[i]) * noise[i];
  return z;
}

Var reparameterize(const GaussianRows& dist, const Tensor& noise) {
  if (noise.shape() != dist.mu.shape()) {
    throw ShapeError("reparameterize: noise " + shape_to_string(noise.shape()) +
                     " does not match mu " + shape_to_string(dist.mu.shape()));
  }
  Var sigma = ops::exp(ops::scale(dist.logvar, 0.5));
  return ops::add(dist.mu, ops::mul(sigma, ops::constant(noise)));
}

double kl_divergence(const DiagGaussian& q, const DiagGaussian& p) {
  if (q.dim() != p.dim() || q.logvar.size() != q.dim() || p.logvar.size() != p.dim()) {
    throw ShapeError("kl_divergence: dimension mismatch " + std::to_string(q.dim()) + " vs " +
                     std::to_string(p.dim()));
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    const double diff = q.mu[i] - p.mu[i];
    kl += p.logvar[i] - q.logvar[i] + std::exp(q.logvar[i] - p.logvar[i]) +
          diff * diff * std::exp(-p.logvar[i]) - 1.0;
  }
  return 0.5 * kl;
}

Var kl_divergence(const GaussianRows& q, const GaussianRows& p) {
  if (q.mu.shape() != p.mu.shape() || q.logvar.shape() != p.logvar.shape()) {
    throw ShapeError("kl_divergence: shapes " + shape_to_string(q.mu.shape()) + " and " +
                     shape_to_string(p.mu.shape()) + " differ");
  }
  Var diff = ops::sub(q.mu, p.mu);
  Var terms = ops::sub(p.logvar, q.logvar) + ops::exp(ops::sub(q.logvar, p.logvar)) +
              ops::mul(ops::square(diff), ops::exp(ops::scale(p.logvar, -1.0)));
  return ops::scale(ops::sum(ops::add_scalar(terms, -1.0)), 0.5);
}

FusionParams make_fusion(numerics::ParameterStore& store, const std::string& prefix,
                         std::size_t d_z, std::size_t d, numerics::Partition part,
                         numerics::Rng& rng) {
  return {store.add(prefix + ".w", numerics::xavier_uniform(d_z, d, rng), part),
          store.add(prefix + ".u", numerics::xavier_uniform(d, d, rng), part),
          store.add(prefix + ".v", numerics::xavier_uniform(d, d, rng), part),
          attention::make_layer_norm(store, prefix + ".norm", d, part)};
}

Var fuse_latent(const Var& z, const Var& o_p, const FusionParams& p,
                const attention::DropoutSpec& drop) {
  if (z.rows() != o_p.rows()) {
    throw ShapeError("fuse_latent: z " + shape_to_string(z.shape()) + " and o_p " +
                     shape_to_string(o_p.shape()) + " have different lengths");
  }
  Var m = ops::linear(ops::tanh(ops::add(ops::linear(z, p.w), ops::linear(o_p, p.u))), p.v);
  return attention::apply_layer_norm(ops::add(o_p, drop.apply(m)), p.norm);
}

}  // namespace wakavt::latent
