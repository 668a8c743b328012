// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wakavt/attention/mask.hpp"
#include "wakavt/numerics/ops.hpp"
#include "wakavt/numerics/parameter_store.hpp"

namespace wakavt::attention {

using numerics::Partition;
using numerics::Tensor;
using numerics::Var;

/// Residual dropout settings threaded through a forward pass.
struct DropoutSpec {
  double rate = 0.0;
  numerics::Mode mode = numerics::Mode::Infer;
  numerics::Rng* rng = nullptr;

  Var apply(const Var& x) const { return numerics::dropout(x, rate, mode, rng); }
};

/// Alignment weights of one attention sublayer, averaged and per head.
struct AlignmentRecord {
  std::string label;
  Tensor mean_weights;
  std::vector<Tensor> head_weights;
};
using AlignmentSink = std::vector<AlignmentRecord>;

/// Text dump: per record a "# label TxT" block of the head average, then one
/// "# label.headK TxT" block per head; each block has T rows of weights.
void write_alignment_dump(std::ostream& out, const AlignmentSink& records);

struct LayerNormParams {
  Var gamma;
  Var beta;
};

struct FeedForwardParams {
  Var w1, b1, w2, b2;
};

struct MultiHeadParams {
  std::vector<Var> wq, wk, wv;  // one [d, d_k] matrix per head
  Var wo;                       // [h*d_k, d]

  std::size_t heads() const { return wq.size(); }
  std::size_t d_k() const { return wq.empty() ? 0 : wq.front().cols(); }
  std::size_t width() const { return wo.defined() ? wo.cols() : 0; }
};

struct TransformerLayerParams {
  MultiHeadParams attn;
  LayerNormParams attn_norm;
  FeedForwardParams ff;
  LayerNormParams ff_norm;
};

struct GmuParams {
  std::array<Var, 3> wf;  // [d, d]
  std::array<Var, 3> wz;  // [3d, d]
};

/// Branches are ordered phrase, sentence, poem.
struct FmsaParams {
  std::array<MultiHeadParams, 3> branches;
  std::array<LayerNormParams, 3> branch_norms;
  GmuParams gmu;
  FeedForwardParams ff;
  LayerNormParams ff_norm;
};

using LayerParams = std::variant<TransformerLayerParams, FmsaParams>;

enum class AttentionKind { Standard, Fmsa };

std::string_view attention_kind_name(AttentionKind kind);
AttentionKind parse_attention_kind(std::string_view name);

// ---- parameter construction ----------------------------------------------

LayerNormParams make_layer_norm(numerics::ParameterStore& store, const std::string& prefix,
                                std::size_t d, Partition part);
FeedForwardParams make_feed_forward(numerics::ParameterStore& store, const std::string& prefix,
                                    std::size_t d, std::size_t inner, Partition part,
                                    numerics::Rng& rng);
MultiHeadParams make_multi_head(numerics::ParameterStore& store, const std::string& prefix,
                                std::size_t d, std::size_t heads, Partition part,
                                numerics::Rng& rng);
LayerParams make_layer(numerics::ParameterStore& store, const std::string& prefix,
                       AttentionKind kind, std::size_t d, std::size_t heads, std::size_t inner,
                       Partition part, numerics::Rng& rng);

// ---- forward --------------------------------------------------------------

Var apply_layer_norm(const Var& x, const LayerNormParams& p);
Var feed_forward(const Var& x, const FeedForwardParams& p);

struct AttentionResult {
  Var output;
  Tensor weights;  // row-stochastic over unmasked entries
};

/// softmax(Q Kᵀ / sqrt(d_k) + mask) V.
AttentionResult scaled_dot_attention(const Var& q, const Var& k, const Var& v,
                                     const AttentionMaskMatrix& mask);

struct MultiHeadResult {
  Var output;
  std::vector<Tensor> head_weights;
};

MultiHeadResult multi_head_attention(const Var& x, const MultiHeadParams& p,
                                     const AttentionMaskMatrix& mask);

/// Post-LN layer: attention + residual + norm, then feed-forward + residual + norm.
Var transformer_layer(const Var& x, const TransformerLayerParams& p,
                      const AttentionMaskMatrix& mask, const DropoutSpec& drop = {},
                      AlignmentSink* sink = nullptr, std::string_view label = {});

struct GmuResult {
  Var output;
  std::array<Var, 3> gates;
};

/// h_i = tanh(o_i W_fi), z_i = sigmoid([o_1,o_2,o_3] W_zi), output sum_i z_i * h_i.
GmuResult gmu_fuse(const Var& o1, const Var& o2, const Var& o3, const GmuParams& p);

/// Result of the three branch sublayers before fusion.
struct FmsaBranches {
  std::array<Var, 3> outputs;
};

FmsaBranches fmsa_branches(const Var& x, const FmsaParams& p, const MaskSet& masks,
                           const DropoutSpec& drop = {}, AlignmentSink* sink = nullptr,
                           std::string_view label = {});

Var fmsa_layer(const Var& x, const FmsaParams& p, const MaskSet& masks,
               const DropoutSpec& drop = {}, AlignmentSink* sink = nullptr,
               std::string_view label = {});
Var fmsa_layer(const Var& x, const FmsaParams& p, const SegmentLayout& layout, bool causal,
               const DropoutSpec& drop = {});

/// Dispatches on the layer kind; standard layers use the poem-level mask.
Var apply_layer(const Var& x, const LayerParams& p, const MaskSet& masks,
                const DropoutSpec& drop = {}, AlignmentSink* sink = nullptr,
                std::string_view label = {});

/// Sinusoidal position code for one position, length d.
std::vector<double> positional_encoding(std::size_t position, std::size_t d);
/// Rows `offset .. offset+T-1` of the sinusoidal table.
Tensor positional_table(std::size_t T, std::size_t d, std::size_t offset = 0);

}  // namespace wakavt::attention
