// SPDX-License-Identifier: Apache-2.0
#include "wakavt/models/loss.hpp"

#include <algorithm>
#include <stdexcept>

namespace wakavt::models {

namespace ops = numerics;

namespace {

std::vector<std::pair<std::size_t, std::size_t>> diagonal(std::span<const int> targets) {
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  coords.reserve(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t)
    coords.emplace_back(t, static_cast<std::size_t>(targets[t]));
  return coords;
}

}  // namespace

Var nll_sum(const Var& logits, std::span<const int> targets) {
  if (logits.rows() != targets.size()) {
    throw numerics::ShapeError("nll: " + std::to_string(logits.rows()) + " logit rows for " +
                               std::to_string(targets.size()) + " targets");
  }
  const auto coords = diagonal(targets);
  return ops::scale(ops::sum(ops::pick(ops::log_softmax(logits), coords)), -1.0);
}

Var nll_loss(const Var& logits, std::span<const int> targets) {
  return ops::scale(nll_sum(logits, targets), 1.0 / static_cast<double>(targets.size()));
}

Var bow_loss(const Var& z, const Var& keyword_embedding, std::span<const int> targets,
             const latent::MlpParams& mlp) {
  Var logp = ops::log_softmax(latent::mlp_forward(ops::concat_cols({z, keyword_embedding}), mlp));
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (int y : targets) coords.emplace_back(0, static_cast<std::size_t>(y));
  return ops::scale(ops::sum(ops::pick(logp, coords)), -1.0);
}

std::vector<std::pair<std::size_t, std::size_t>> sbow_coords(std::span<const int> targets,
                                                             std::size_t window) {
  if (window == 0) throw std::invalid_argument("sbow window must be at least 1");
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  const std::size_t T = targets.size();
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = t; j < std::min(t + window, T); ++j)
      coords.emplace_back(t, static_cast<std::size_t>(targets[j]));
  return coords;
}

Var sbow_loss(const Var& z, const Var& o_p, std::span<const int> targets, std::size_t window,
              const latent::MlpParams& mlp) {
  if (z.rows() != targets.size() || o_p.rows() != targets.size()) {
    throw numerics::ShapeError("sbow: latent rows do not match the targets");
  }
  Var logp = ops::log_softmax(latent::mlp_forward(ops::concat_cols({z, o_p}), mlp));
  const auto coords = sbow_coords(targets, window);
  return ops::scale(ops::sum(ops::pick(logp, coords)), -1.0);
}

double kl_anneal(std::size_t step, std::size_t anneal_steps) {
  if (anneal_steps == 0) throw std::invalid_argument("anneal horizon must be at least 1");
  return std::min(1.0, static_cast<double>(step) / static_cast<double>(anneal_steps));
}

LossTerms compute_loss(const Model& model, const ForwardTrace& trace, double kl_weight) {
  const auto& c = model.config();
  LossTerms terms;
  terms.nll = nll_sum(trace.logits, trace.targets);
  terms.kl = trace.posterior && trace.prior
                 ? latent::kl_divergence(*trace.posterior, *trace.prior)
                 : ops::constant(Tensor::scalar(0.0));
  switch (c.kind) {
    case ModelKind::Tlm:
      terms.aux = ops::constant(Tensor::scalar(0.0));
      break;
    case ModelKind::Tvae:
      terms.aux = bow_loss(trace.z, trace.keyword_embedding, trace.targets, model.params().aux_mlp);
      break;
    case ModelKind::WakaVT:
      terms.aux =
          sbow_loss(trace.z, trace.o_p, trace.targets, c.sbow_window, model.params().aux_mlp);
      break;
  }
  terms.total = ops::add(ops::add(terms.nll, ops::scale(terms.kl, kl_weight)),
                         ops::scale(terms.aux, c.alpha));
  return terms;
}

}  // namespace wakavt::models
