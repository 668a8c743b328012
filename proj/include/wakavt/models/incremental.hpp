// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "wakavt/attention/mask.hpp"
#include "wakavt/latent/gaussian.hpp"
#include "wakavt/models/model.hpp"

namespace wakavt::models {

/// Keys and values of one sequence position for every cached attention head.
struct CacheNode {
  std::shared_ptr<const CacheNode> parent;
  std::size_t position = 0;
  int token = -1;
  int phrase = attention::kPrefixSegment;
  int sentence = attention::kPrefixSegment;
  std::vector<Tensor> keys, values;  // indexed by head slot, each [1, d_k]
};

/// Immutable decoding state. Copies share their cached history, so beams
/// that extend a common prefix reuse it.
struct DecoderState {
  std::shared_ptr<const CacheNode> tail;
  attention::SegmentLayout layout;
  Tensor poem_latent;  // TVAE: z projected to the model width, [1, d]
  std::vector<int> body;  // tokens fed after the start token

  std::size_t size() const { return layout.size(); }
};

/// A position whose pre-latent part has run. For WakaVT `prior` is the
/// distribution of the latent at this position.
struct PendingStep {
  DecoderState state;
  std::shared_ptr<CacheNode> node;
  Tensor row;  // decoder input row, or o^(p) for WakaVT
  std::optional<latent::DiagGaussian> prior;
};

struct StepOutput {
  DecoderState state;
  Tensor logits;  // [V], predicting the next body token
};

/**
 * Causal decoding one position at a time with cached keys and values.
 * Produces the same logits as an infer-mode forward pass over the same
 * latents.
 *
 * Usage: begin(keyword) -> feed(start) -> complete(z_1) -> feed(x_1) ->
 * complete(z_2) ... where complete() yields the logits for the next token.
 */
class IncrementalDecoder {
 public:
  explicit IncrementalDecoder(const Model& model);

  /// TVAE needs the poem latent [1, d_z] here; the other kinds ignore it.
  DecoderState begin(int keyword, const Tensor* poem_latent = nullptr) const;
  /// TVAE prior, a function of the keyword alone.
  latent::DiagGaussian keyword_prior(int keyword) const;

  PendingStep feed(const DecoderState& state, int token) const;
  /// `z` is the latent row [1, d_z] for WakaVT, ignored otherwise.
  StepOutput complete(const PendingStep& pending, const Tensor* z = nullptr) const;

 private:
  Var run_layers(Var x, const std::vector<attention::LayerParams>& stack, std::size_t first_gid,
                 CacheNode& node, const std::vector<const CacheNode*>& history) const;
  std::size_t slot(std::size_t gid, std::size_t branch, std::size_t head) const {
    return (gid * 3 + branch) * heads_ + head;
  }

  const Model& model_;
  std::size_t heads_;
  std::size_t slots_;
};

}  // namespace wakavt::models
