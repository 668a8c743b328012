// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "wakavt/latent/gaussian.hpp"
#include "wakavt/models/model.hpp"

namespace wakavt::models {

/// Summed softmax cross-entropy of logits [T, V] against T targets.
Var nll_sum(const Var& logits, std::span<const int> targets);
/// Mean cross-entropy per token; exp of this is the perplexity.
Var nll_loss(const Var& logits, std::span<const int> targets);

/// Bag-of-words loss: one distribution from [z, keyword embedding] scores
/// every target token.
Var bow_loss(const Var& z, const Var& keyword_embedding, std::span<const int> targets,
             const latent::MlpParams& mlp);

/// (row, token) pairs scored by the sequential bag loss: row t predicts
/// targets t..t+window-1, truncated at the end.
std::vector<std::pair<std::size_t, std::size_t>> sbow_coords(std::span<const int> targets,
                                                             std::size_t window);
Var sbow_loss(const Var& z, const Var& o_p, std::span<const int> targets, std::size_t window,
              const latent::MlpParams& mlp);

/// min(1, step / anneal_steps).
double kl_anneal(std::size_t step, std::size_t anneal_steps);

struct LossTerms {
  Var total, nll, kl, aux;  // per poem; nll summed over tokens
};

/// total = nll + kl_weight * kl + alpha * aux. KL needs a posterior, so it
/// is zero for infer-mode traces and for TLM; aux is zero for TLM.
LossTerms compute_loss(const Model& model, const ForwardTrace& trace, double kl_weight);

}  // namespace wakavt::models
