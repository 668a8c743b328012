// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wakavt/attention/layers.hpp"
#include "wakavt/corpus/vocabulary.hpp"
#include "wakavt/latent/gaussian.hpp"
#include "wakavt/models/config.hpp"
#include "wakavt/numerics/parameter_store.hpp"

namespace wakavt::models {

using numerics::Tensor;
using numerics::Var;

/// Parameters of every component; unused members stay empty for a kind.
struct ModelParams {
  Var embedding;  // [V, d]
  Var out_w;      // [d, V]
  Var out_b;      // [V]

  std::vector<attention::LayerParams> recognition_stack;  // TVAE encoder / WakaVT o^(r)
  std::vector<attention::LayerParams> prior_stack;        // WakaVT o^(p)
  std::vector<attention::LayerParams> decoder_stack;      // TLM, TVAE decoder, WakaVT after-latent

  latent::MlpParams recognition_mlp;
  latent::MlpParams prior_mlp;
  latent::MlpParams aux_mlp;  // BOW (TVAE) or SBOW (WakaVT)
  latent::FusionParams fusion;
  Var latent_proj;  // TVAE, [d_z, d] when d_z != d
};

struct ForwardOptions {
  /// Train: latents from the posterior. Infer: latents from the prior.
  numerics::Mode mode = numerics::Mode::Infer;
  /// Dropout is active only when true and in Train mode.
  bool dropout = true;
  numerics::Rng* rng = nullptr;
  /// Standard-normal noise for the latents, [rows, d_z]; drawn from `rng`
  /// (or zero) when absent.
  const Tensor* noise = nullptr;
  /// Use these latent values directly, bypassing sampling.
  const Tensor* latents = nullptr;
  bool zero_noise = false;
  attention::AlignmentSink* alignments = nullptr;
};

/**
 * Everything a forward pass produces.
 *
 * Sequence layout: the decoder reads [keyword, start, x_1..x_{T-1}] and row t
 * of `logits` predicts x_{t+1}. The end token is never a target; the budget
 * automaton forces it once the poem is complete. WakaVT keeps one latent per
 * target row, and its non-causal stack reads [keyword, x_1..x_T].
 */
struct ForwardTrace {
  Var logits;
  std::vector<int> targets;
  std::optional<latent::GaussianRows> posterior;
  std::optional<latent::GaussianRows> prior;
  Var z;
  Var o_r, o_p, o_m;  // WakaVT, rows aligned with targets
  Var keyword_embedding;
};

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Model {
 public:
  Model(ModelConfig config, std::size_t vocab_size, std::uint64_t init_seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  numerics::ParameterStore& store() { return store_; }
  const numerics::ParameterStore& store() const { return store_; }
  const ModelParams& params() const { return params_; }
  /// Number of latent rows for a body of `body_length` tokens.
  std::size_t latent_rows(std::size_t body_length) const;

  ForwardTrace forward(const corpus::Poem& poem, const ForwardOptions& options = {}) const;

  /// Input rows for the decoder: scaled embeddings plus positions.
  Var embed(std::span<const int> ids, std::size_t offset = 0) const;

  /// Loads "word v_1 .. v_d" lines into the embedding rows of known words.
  std::size_t load_embeddings(const std::string& path, const corpus::Vocabulary& vocab);

 private:
  ModelConfig config_;
  std::size_t vocab_size_;
  numerics::ParameterStore store_;
  ModelParams params_;
};

}  // namespace wakavt::models
