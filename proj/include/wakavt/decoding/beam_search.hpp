// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "wakavt/constraint/morae.hpp"
#include "wakavt/corpus/vocabulary.hpp"
#include "wakavt/models/incremental.hpp"
#include "wakavt/numerics/random.hpp"

namespace wakavt::decoding {

using numerics::Tensor;

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenerationConfig {
  std::size_t beam_width = 20;
  std::size_t max_length = 64;  // body tokens, separators included
  std::uint64_t seed = 0;
  /// Finished beams are ranked by score / length^length_exponent.
  double length_exponent = 1.0;
  /// Drop finished beams whose body lacks the keyword.
  bool strict_keyword = false;
  /// Latents take their prior means.
  bool zero_noise = false;
};

/// Latent history; beams extending a common prefix share its entries.
using LatentHistory = std::vector<std::shared_ptr<const Tensor>>;

struct Beam {
  models::DecoderState state;
  constraint::BudgetState budget;
  LatentHistory latents;  // WakaVT: one [1, d_z] row per step
  std::vector<int> tokens;
  double score = 0.0;
  bool finished = false;
};

struct GenerationResult {
  corpus::Poem poem;
  double score = 0.0;             // cumulative log-probability
  double normalized_score = 0.0;  // ranking score
  bool contains_keyword = false;
  LatentHistory latents;
  Tensor poem_latent;  // TVAE, [1, d_z]
  std::vector<Beam> finished;  // every finished beam, in finishing order
};

/// Latents of a result in the layout ForwardOptions::latents expects;
/// empty for TLM.
Tensor result_latents(const GenerationResult& result);

/// Draws z_t for a pending WakaVT position from its prior.
Tensor sample_prior_step(const models::PendingStep& pending, numerics::Rng& rng, bool zero_noise);

/**
 * Constrained beam search. Every live beam's logits get the beam's additive
 * morae mask before the softmax, so each prefix stays inside the budget
 * automaton. Candidates are ranked by cumulative log-probability, ties by
 * lower token id and then by beam order.
 */
GenerationResult beam_search_generate(const models::Model& model,
                                      const constraint::MoraeTable& table, int keyword,
                                      const GenerationConfig& config);

/// One poem per keyword; keyword i uses seed mix_seed(config.seed, i).
std::vector<GenerationResult> generate_all(const models::Model& model,
                                           const constraint::MoraeTable& table,
                                           std::span<const int> keywords,
                                           const GenerationConfig& config);

}  // namespace wakavt::decoding
