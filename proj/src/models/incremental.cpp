// SPDX-License-Identifier: Apache-2.0
#include "wakavt/models/incremental.hpp"

#include <cmath>

namespace wakavt::models {

namespace ops = numerics;
using attention::MaskLevel;
using corpus::Vocabulary;

namespace {

int segment(const CacheNode& n, std::size_t branch) {
  switch (branch) {
    case 0: return n.phrase;
    case 1: return n.sentence;
    default: return n.position < 2 ? attention::kPrefixSegment : 0;
  }
}

std::vector<const CacheNode*> chain(const std::shared_ptr<const CacheNode>& tail) {
  std::vector<const CacheNode*> out;
  for (const CacheNode* n = tail.get(); n; n = n->parent.get()) out.push_back(n);
  return {out.rbegin(), out.rend()};
}

}  // namespace

IncrementalDecoder::IncrementalDecoder(const Model& model)
    : model_(model), heads_(model.config().heads) {
  const auto& p = model.params();
  slots_ = (p.prior_stack.size() + p.decoder_stack.size()) * 3 * heads_;
}

Var IncrementalDecoder::run_layers(Var x, const std::vector<attention::LayerParams>& stack,
                                   std::size_t first_gid, CacheNode& node,
                                   const std::vector<const CacheNode*>& history) const {
  auto attend = [&](const Var& in, const attention::MultiHeadParams& p, std::size_t gid,
                    std::size_t branch) {
    const int seg_t = segment(node, branch);
    std::vector<const CacheNode*> seen;
    for (const CacheNode* u : history)
      if (attention::visible(seg_t, segment(*u, branch), node.position, u->position, true))
        seen.push_back(u);
    seen.push_back(&node);
    const double s = 1.0 / std::sqrt(static_cast<double>(p.d_k()));
    std::vector<Var> outs;
    for (std::size_t h = 0; h < p.heads(); ++h) {
      const std::size_t k = slot(gid, branch, h);
      node.keys[k] = ops::linear(in, p.wk[h]).value();
      node.values[k] = ops::linear(in, p.wv[h]).value();
      Tensor K({seen.size(), p.d_k()}), V({seen.size(), p.d_k()});
      for (std::size_t r = 0; r < seen.size(); ++r) {
        const auto kr = seen[r]->keys[k].values();
        const auto vr = seen[r]->values[k].values();
        std::copy(kr.begin(), kr.end(), K.row(r).begin());
        std::copy(vr.begin(), vr.end(), V.row(r).begin());
      }
      Var q = ops::linear(in, p.wq[h]);
      Var w = ops::softmax(ops::scale(ops::matmul(q, ops::transpose(ops::constant(K))), s), 1);
      outs.push_back(ops::matmul(w, ops::constant(V)));
    }
    return ops::linear(outs.size() == 1 ? outs.front() : ops::concat_cols(outs), p.wo);
  };
  auto ff_block = [](const Var& h, const attention::FeedForwardParams& ff,
                     const attention::LayerNormParams& norm) {
    return attention::apply_layer_norm(ops::add(h, attention::feed_forward(h, ff)), norm);
  };

  for (std::size_t i = 0; i < stack.size(); ++i) {
    const std::size_t gid = first_gid + i;
    if (const auto* t = std::get_if<attention::TransformerLayerParams>(&stack[i])) {
      Var h = attention::apply_layer_norm(ops::add(x, attend(x, t->attn, gid, 2)), t->attn_norm);
      x = ff_block(h, t->ff, t->ff_norm);
    } else {
      const auto& f = std::get<attention::FmsaParams>(stack[i]);
      std::array<Var, 3> o;
      for (std::size_t b = 0; b < 3; ++b)
        o[b] = attention::apply_layer_norm(ops::add(x, attend(x, f.branches[b], gid, b)),
                                           f.branch_norms[b]);
      x = ff_block(attention::gmu_fuse(o[0], o[1], o[2], f.gmu).output, f.ff, f.ff_norm);
    }
  }
  return x;
}

latent::DiagGaussian IncrementalDecoder::keyword_prior(int keyword) const {
  if (model_.config().kind != ModelKind::Tvae) throw ModelError("keyword prior is TVAE only");
  ops::NoGradGuard guard;
  const int kw[] = {keyword};
  return latent::project_gaussian(ops::embedding(model_.params().embedding, kw),
                                  model_.params().prior_mlp)
      .at(0);
}

DecoderState IncrementalDecoder::begin(int keyword, const Tensor* poem_latent) const {
  if (keyword < 0 || static_cast<std::size_t>(keyword) >= model_.vocab_size() ||
      Vocabulary::is_special(keyword)) {
    throw ModelError("keyword id " + std::to_string(keyword) + " is not a content word");
  }
  ops::NoGradGuard guard;
  const auto& c = model_.config();
  const auto& p = model_.params();
  DecoderState state;
  if (c.kind == ModelKind::Tvae) {
    if (!poem_latent || poem_latent->shape() != numerics::Shape{1, c.d_latent}) {
      throw ModelError("TVAE decoding needs a [1, d_latent] poem latent");
    }
    Var z = ops::constant(*poem_latent);
    state.poem_latent = (p.latent_proj.defined() ? ops::linear(z, p.latent_proj) : z).value();
  }
  state.layout.push_prefix();
  auto node = std::make_shared<CacheNode>();
  node->token = keyword;
  node->keys.resize(slots_);
  node->values.resize(slots_);
  const int ids[] = {keyword};
  Var x = model_.embed(ids, 0);
  if (c.kind == ModelKind::WakaVT) {
    Var o_p = run_layers(x, p.prior_stack, 0, *node, {});
    x = attention::apply_layer_norm(o_p, p.fusion.norm);
  }
  run_layers(x, p.decoder_stack, p.prior_stack.size(), *node, {});
  state.tail = std::move(node);
  return state;
}

PendingStep IncrementalDecoder::feed(const DecoderState& state, int token) const {
  if (!state.tail) throw ModelError("decoder state was not started");
  const bool first = state.size() == 1;
  if (first != (token == Vocabulary::kStart)) {
    throw ModelError(first ? "the first fed token must be the start token"
                           : "the start token may only be fed once");
  }
  if (token < 0 || static_cast<std::size_t>(token) >= model_.vocab_size()) {
    throw ModelError("token id " + std::to_string(token) + " outside vocabulary");
  }
  ops::NoGradGuard guard;
  const auto& c = model_.config();
  const auto& p = model_.params();
  PendingStep pending;
  pending.state = state;
  auto& layout = pending.state.layout;
  if (first) {
    layout.push_prefix();
  } else {
    layout.push(token, Vocabulary::kSep);
    pending.state.body.push_back(token);
  }
  const std::size_t t = layout.size() - 1;
  auto node = std::make_shared<CacheNode>();
  node->parent = state.tail;
  node->position = t;
  node->token = token;
  node->phrase = layout.phrase_id(t);
  node->sentence = layout.sentence_id(t);
  node->keys.resize(slots_);
  node->values.resize(slots_);

  const int ids[] = {token};
  Var x = model_.embed(ids, t);
  if (first && c.kind == ModelKind::Tvae) x = ops::add(x, ops::constant(state.poem_latent));
  if (c.kind == ModelKind::WakaVT) {
    x = run_layers(x, p.prior_stack, 0, *node, chain(state.tail));
    pending.prior = latent::project_gaussian(x, p.prior_mlp).at(0);
  }
  pending.row = x.value();
  pending.node = std::move(node);
  return pending;
}

StepOutput IncrementalDecoder::complete(const PendingStep& pending, const Tensor* z) const {
  ops::NoGradGuard guard;
  const auto& c = model_.config();
  const auto& p = model_.params();
  Var x = ops::constant(pending.row);
  if (c.kind == ModelKind::WakaVT) {
    if (!z || z->shape() != numerics::Shape{1, c.d_latent}) {
      throw ModelError("WakaVT decoding needs a [1, d_latent] latent per position");
    }
    x = latent::fuse_latent(ops::constant(*z), x, p.fusion);
  }
  auto node = std::make_shared<CacheNode>(*pending.node);
  x = run_layers(x, p.decoder_stack, p.prior_stack.size(), *node, chain(node->parent));
  StepOutput out;
  out.logits = ops::linear(x, p.out_w, p.out_b).value().reshaped({model_.vocab_size()});
  out.state = pending.state;
  out.state.tail = std::move(node);
  return out;
}

}  // namespace wakavt::models
