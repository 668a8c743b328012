// SPDX-License-Identifier: Apache-2.0
#include "wakavt/attention/layers.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace wakavt::attention {

namespace ops = numerics;
using numerics::ShapeError;
using numerics::shape_to_string;

std::string_view attention_kind_name(AttentionKind kind) {
  return kind == AttentionKind::Fmsa ? "fmsa" : "standard";
}

AttentionKind parse_attention_kind(std::string_view name) {
  if (name == "standard") return AttentionKind::Standard;
  if (name == "fmsa") return AttentionKind::Fmsa;
  throw std::invalid_argument("unknown attention kind '" + std::string(name) +
                              "' (expected standard or fmsa)");
}

void write_alignment_dump(std::ostream& out, const AlignmentSink& records) {
  const auto old = out.precision(6);
  auto block = [&](const std::string& label, const Tensor& w) {
    out << "# " << label << ' ' << w.rows() << 'x' << w.cols() << '\n';
    for (std::size_t t = 0; t < w.rows(); ++t) {
      for (std::size_t u = 0; u < w.cols(); ++u) out << (u ? " " : "") << w.at(t, u);
      out << '\n';
    }
  };
  for (const auto& r : records) {
    block(r.label, r.mean_weights);
    for (std::size_t h = 0; h < r.head_weights.size(); ++h)
      block(r.label + ".head" + std::to_string(h), r.head_weights[h]);
  }
  out.precision(old);
}

// ---- parameters -----------------------------------------------------------

LayerNormParams make_layer_norm(numerics::ParameterStore& store, const std::string& prefix,
                                std::size_t d, Partition part) {
  return {store.add(prefix + ".gamma", Tensor({d}, 1.0), part),
          store.add(prefix + ".beta", Tensor({d}, 0.0), part)};
}

FeedForwardParams make_feed_forward(numerics::ParameterStore& store, const std::string& prefix,
                                    std::size_t d, std::size_t inner, Partition part,
                                    numerics::Rng& rng) {
  return {store.add(prefix + ".w1", numerics::xavier_uniform(d, inner, rng), part),
          store.add(prefix + ".b1", Tensor({inner}, 0.0), part),
          store.add(prefix + ".w2", numerics::xavier_uniform(inner, d, rng), part),
          store.add(prefix + ".b2", Tensor({d}, 0.0), part)};
}

MultiHeadParams make_multi_head(numerics::ParameterStore& store, const std::string& prefix,
                                std::size_t d, std::size_t heads, Partition part,
                                numerics::Rng& rng) {
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("model width " + std::to_string(d) +
                                " is not divisible by head count " + std::to_string(heads));
  }
  const std::size_t dk = d / heads;
  MultiHeadParams p;
  for (std::size_t i = 0; i < heads; ++i) {
    const std::string h = prefix + ".head" + std::to_string(i);
    p.wq.push_back(store.add(h + ".wq", numerics::xavier_uniform(d, dk, rng), part));
    p.wk.push_back(store.add(h + ".wk", numerics::xavier_uniform(d, dk, rng), part));
    p.wv.push_back(store.add(h + ".wv", numerics::xavier_uniform(d, dk, rng), part));
  }
  p.wo = store.add(prefix + ".wo", numerics::xavier_uniform(d, d, rng), part);
  return p;
}

LayerParams make_layer(numerics::ParameterStore& store, const std::string& prefix,
                       AttentionKind kind, std::size_t d, std::size_t heads, std::size_t inner,
                       Partition part, numerics::Rng& rng) {
  if (kind == AttentionKind::Standard) {
    TransformerLayerParams p;
    p.attn = make_multi_head(store, prefix + ".attn", d, heads, part, rng);
    p.attn_norm = make_layer_norm(store, prefix + ".attn_norm", d, part);
    p.ff = make_feed_forward(store, prefix + ".ff", d, inner, part, rng);
    p.ff_norm = make_layer_norm(store, prefix + ".ff_norm", d, part);
    return p;
  }
  static constexpr std::array<const char*, 3> kBranch{"phrase", "sentence", "poem"};
  FmsaParams p;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string b = prefix + "." + kBranch[i];
    p.branches[i] = make_multi_head(store, b + ".attn", d, heads, part, rng);
    p.branch_norms[i] = make_layer_norm(store, b + ".norm", d, part);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string g = prefix + ".gmu" + std::to_string(i + 1);
    p.gmu.wf[i] = store.add(g + ".wf", numerics::xavier_uniform(d, d, rng), part);
    p.gmu.wz[i] = store.add(g + ".wz", numerics::xavier_uniform(3 * d, d, rng), part);
  }
  p.ff = make_feed_forward(store, prefix + ".ff", d, inner, part, rng);
  p.ff_norm = make_layer_norm(store, prefix + ".ff_norm", d, part);
  return p;
}

// ---- forward --------------------------------------------------------------

Var apply_layer_norm(const Var& x, const LayerNormParams& p) {
  return ops::layer_norm(x, p.gamma, p.beta);
}

Var feed_forward(const Var& x, const FeedForwardParams& p) {
  return ops::linear(ops::relu(ops::linear(x, p.w1, p.b1)), p.w2, p.b2);
}

AttentionResult scaled_dot_attention(const Var& q, const Var& k, const Var& v,
                                     const AttentionMaskMatrix& mask) {
  if (q.value().rank() != 2 || k.value().rank() != 2 || v.value().rank() != 2 ||
      q.cols() != k.cols() || k.rows() != v.rows()) {
    throw ShapeError("scaled_dot_attention: incompatible Q " + shape_to_string(q.shape()) +
                     ", K " + shape_to_string(k.shape()) + ", V " + shape_to_string(v.shape()));
  }
  if (mask.entries.shape() != numerics::Shape{q.rows(), k.rows()}) {
    throw ShapeError("scaled_dot_attention: mask " + shape_to_string(mask.entries.shape()) +
                     " does not cover " + std::to_string(q.rows()) + " positions");
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Var scores = ops::add_constant(ops::scale(ops::matmul(q, ops::transpose(k)), s), mask.entries);
  Var weights = ops::softmax(scores, 1);
  return {ops::matmul(weights, v), weights.value()};
}

MultiHeadResult multi_head_attention(const Var& x, const MultiHeadParams& p,
                                     const AttentionMaskMatrix& mask) {
  if (x.value().rank() != 2 || x.cols() != p.width() || p.heads() * p.d_k() != p.width()) {
    throw ShapeError("multi_head_attention: input " + shape_to_string(x.shape()) +
                     " does not match width " + std::to_string(p.width()) + " with " +
                     std::to_string(p.heads()) + " heads");
  }
  MultiHeadResult r;
  std::vector<Var> outs;
  for (std::size_t i = 0; i < p.heads(); ++i) {
    auto a = scaled_dot_attention(ops::linear(x, p.wq[i]), ops::linear(x, p.wk[i]),
                                  ops::linear(x, p.wv[i]), mask);
    outs.push_back(a.output);
    r.head_weights.push_back(std::move(a.weights));
  }
  r.output = ops::linear(outs.size() == 1 ? outs.front() : ops::concat_cols(outs), p.wo);
  return r;
}

namespace {

void record(AlignmentSink* sink, std::string_view label, std::vector<Tensor> heads) {
  if (!sink) return;
  Tensor mean(heads.front().shape(), 0.0);
  for (const auto& h : heads)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += h[i];
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] /= static_cast<double>(heads.size());
  sink->push_back({std::string(label), std::move(mean), std::move(heads)});
}

Var residual_block(const Var& x, const MultiHeadParams& attn, const LayerNormParams& norm,
                   const AttentionMaskMatrix& mask, const DropoutSpec& drop, AlignmentSink* sink,
                   std::string_view label) {
  auto a = multi_head_attention(x, attn, mask);
  record(sink, label, std::move(a.head_weights));
  return apply_layer_norm(ops::add(x, drop.apply(a.output)), norm);
}

Var ff_block(const Var& x, const FeedForwardParams& ff, const LayerNormParams& norm,
             const DropoutSpec& drop) {
  return apply_layer_norm(ops::add(x, drop.apply(feed_forward(x, ff))), norm);
}

}  // namespace

Var transformer_layer(const Var& x, const TransformerLayerParams& p,
                      const AttentionMaskMatrix& mask, const DropoutSpec& drop,
                      AlignmentSink* sink, std::string_view label) {
  Var h = residual_block(x, p.attn, p.attn_norm, mask, drop, sink, label);
  return ff_block(h, p.ff, p.ff_norm, drop);
}

GmuResult gmu_fuse(const Var& o1, const Var& o2, const Var& o3, const GmuParams& p) {
  if (o1.shape() != o2.shape() || o1.shape() != o3.shape()) {
    throw ShapeError("gmu_fuse: branch shapes " + shape_to_string(o1.shape()) + ", " +
                     shape_to_string(o2.shape()) + ", " + shape_to_string(o3.shape()) +
                     " differ");
  }
  const std::array<Var, 3> o{o1, o2, o3};
  Var joined = ops::concat_cols({o1, o2, o3});
  GmuResult r;
  for (std::size_t i = 0; i < 3; ++i) {
    Var h = ops::tanh(ops::linear(o[i], p.wf[i]));
    r.gates[i] = ops::sigmoid(ops::linear(joined, p.wz[i]));
    Var term = ops::mul(r.gates[i], h);
    r.output = i == 0 ? term : ops::add(r.output, term);
  }
  return r;
}

FmsaBranches fmsa_branches(const Var& x, const FmsaParams& p, const MaskSet& masks,
                           const DropoutSpec& drop, AlignmentSink* sink,
                           std::string_view label) {
  static constexpr std::array<const char*, 3> kBranch{"phrase", "sentence", "poem"};
  FmsaBranches b;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string l = std::string(label) + "." + kBranch[i];
    b.outputs[i] = residual_block(x, p.branches[i], p.branch_norms[i], masks[i], drop, sink, l);
  }
  return b;
}

Var fmsa_layer(const Var& x, const FmsaParams& p, const MaskSet& masks, const DropoutSpec& drop,
               AlignmentSink* sink, std::string_view label) {
  auto b = fmsa_branches(x, p, masks, drop, sink, label);
  Var fused = gmu_fuse(b.outputs[0], b.outputs[1], b.outputs[2], p.gmu).output;
  return ff_block(fused, p.ff, p.ff_norm, drop);
}

Var fmsa_layer(const Var& x, const FmsaParams& p, const SegmentLayout& layout, bool causal,
               const DropoutSpec& drop) {
  if (layout.size() != x.rows()) {
    throw ShapeError("fmsa_layer: layout covers " + std::to_string(layout.size()) +
                     " positions, input has " + std::to_string(x.rows()));
  }
  return fmsa_layer(x, p, MaskSet::build(layout, causal), drop);
}

Var apply_layer(const Var& x, const LayerParams& p, const MaskSet& masks,
                const DropoutSpec& drop, AlignmentSink* sink, std::string_view label) {
  if (const auto* t = std::get_if<TransformerLayerParams>(&p)) {
    return transformer_layer(x, *t, masks.poem, drop, sink, label);
  }
  return fmsa_layer(x, std::get<FmsaParams>(p), masks, drop, sink, label);
}

std::vector<double> positional_encoding(std::size_t position, std::size_t d) {
  std::vector<double> row(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
    const double angle = static_cast<double>(position) * rate;
    row[i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
  }
  return row;
}

Tensor positional_table(std::size_t T, std::size_t d, std::size_t offset) {
  Tensor t({T, d});
  for (std::size_t r = 0; r < T; ++r) {
    auto row = positional_encoding(offset + r, d);
    std::copy(row.begin(), row.end(), t.row(r).begin());
  }
  return t;
}

}  // namespace wakavt::attention
