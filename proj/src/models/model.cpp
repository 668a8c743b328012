// SPDX-License-Identifier: Apache-2.0
#include "wakavt/models/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace wakavt::models {

namespace ops = numerics;
using attention::MaskSet;
using attention::SegmentLayout;
using corpus::Vocabulary;
using numerics::Partition;

namespace {

std::vector<attention::LayerParams> make_stack(numerics::ParameterStore& store,
                                               const std::string& prefix, std::size_t layers,
                                               const ModelConfig& c, Partition part,
                                               numerics::Rng& rng) {
  std::vector<attention::LayerParams> stack;
  for (std::size_t i = 0; i < layers; ++i) {
    stack.push_back(attention::make_layer(store, prefix + ".layer" + std::to_string(i), c.attention,
                                          c.d_model, c.heads, c.ff_inner, part, rng));
  }
  return stack;
}

Var run_stack(Var h, const std::vector<attention::LayerParams>& stack, const MaskSet& masks,
              const attention::DropoutSpec& drop, attention::AlignmentSink* sink,
              const std::string& label) {
  for (std::size_t i = 0; i < stack.size(); ++i) {
    h = attention::apply_layer(h, stack[i], masks, drop, sink, label + ".layer" + std::to_string(i));
  }
  return h;
}

}  // namespace

Model::Model(ModelConfig config, std::size_t vocab_size, std::uint64_t init_seed)
    : config_(std::move(config)), vocab_size_(vocab_size) {
  config_.validate();
  if (vocab_size_ <= static_cast<std::size_t>(Vocabulary::kNumSpecials)) {
    throw ModelError("vocabulary holds no content words");
  }
  numerics::Rng rng(init_seed, 0x1417);
  const auto& c = config_;
  const std::size_t d = c.d_model, V = vocab_size_;
  params_.embedding = store_.add(
      "embedding", numerics::uniform_tensor({V, d}, c.embedding_init, rng), Partition::Theta);
  params_.out_w = store_.add("output.w", numerics::xavier_uniform(d, V, rng), Partition::Theta);
  params_.out_b = store_.add("output.b", Tensor({V}, 0.0), Partition::Theta);

  switch (c.kind) {
    case ModelKind::Tlm:
      params_.decoder_stack = make_stack(store_, "decoder", c.n1 + c.n2, c, Partition::Theta, rng);
      break;
    case ModelKind::Tvae:
      params_.recognition_stack = make_stack(store_, "encoder", c.n1, c, Partition::PhiR, rng);
      params_.decoder_stack = make_stack(store_, "decoder", c.n2, c, Partition::Theta, rng);
      params_.recognition_mlp =
          latent::make_mlp(store_, "recognition_mlp", 2 * d, d, 2 * c.d_latent, Partition::PhiR, rng);
      params_.prior_mlp =
          latent::make_mlp(store_, "prior_mlp", d, d, 2 * c.d_latent, Partition::PhiP, rng);
      params_.aux_mlp = latent::make_mlp(store_, "bow_mlp", c.d_latent + d, d, V, Partition::Xi, rng);
      if (c.d_latent != d) {
        params_.latent_proj = store_.add(
            "latent_proj", numerics::xavier_uniform(c.d_latent, d, rng), Partition::Theta);
      }
      break;
    case ModelKind::WakaVT:
      params_.recognition_stack = make_stack(store_, "recognition", c.n1, c, Partition::PhiR, rng);
      params_.prior_stack = make_stack(store_, "prior", c.n1, c, Partition::Theta, rng);
      params_.decoder_stack = make_stack(store_, "decoder", c.n2, c, Partition::Theta, rng);
      params_.recognition_mlp =
          latent::make_mlp(store_, "recognition_mlp", d, d, 2 * c.d_latent, Partition::PhiR, rng);
      params_.prior_mlp =
          latent::make_mlp(store_, "prior_mlp", d, d, 2 * c.d_latent, Partition::PhiP, rng);
      params_.fusion = latent::make_fusion(store_, "fusion", c.d_latent, d, Partition::Theta, rng);
      params_.aux_mlp =
          latent::make_mlp(store_, "sbow_mlp", c.d_latent + d, d, V, Partition::Xi, rng);
      break;
  }
}

std::size_t Model::latent_rows(std::size_t body_length) const {
  switch (config_.kind) {
    case ModelKind::Tlm: return 0;
    case ModelKind::Tvae: return 1;
    case ModelKind::WakaVT: return body_length;
  }
  return 0;
}

Var Model::embed(std::span<const int> ids, std::size_t offset) const {
  const double scale = std::sqrt(static_cast<double>(config_.d_model));
  return ops::add_constant(ops::scale(ops::embedding(params_.embedding, ids), scale),
                           attention::positional_table(ids.size(), config_.d_model, offset));
}

ForwardTrace Model::forward(const corpus::Poem& poem, const ForwardOptions& opt) const {
  const int V = static_cast<int>(vocab_size_);
  if (poem.keyword < 0 || poem.keyword >= V || Vocabulary::is_special(poem.keyword)) {
    throw ModelError("keyword id " + std::to_string(poem.keyword) + " is not a content word");
  }
  for (int t : poem.tokens) {
    if (t < 0 || t >= V) throw ModelError("token id " + std::to_string(t) + " outside vocabulary");
  }
  const auto& c = config_;
  const std::size_t T = poem.tokens.size();
  if (T == 0) throw ModelError("empty poem body");
  const bool train = opt.mode == numerics::Mode::Train;

  ForwardTrace trace;
  trace.targets = poem.tokens;

  // Teacher forcing: [keyword, start, x_1..x_{T-1}].
  const std::span<const int> shifted(poem.tokens.data(), T - 1);
  std::vector<int> dec_ids{poem.keyword, Vocabulary::kStart};
  dec_ids.insert(dec_ids.end(), shifted.begin(), shifted.end());
  const SegmentLayout layout(2, shifted, Vocabulary::kSep);
  const MaskSet causal = MaskSet::build(layout, true);

  const attention::DropoutSpec drop{
      c.dropout, train && opt.dropout ? numerics::Mode::Train : numerics::Mode::Infer, opt.rng};
  Var input = drop.apply(embed(dec_ids));

  auto sample = [&](const latent::GaussianRows& g) -> Var {
    const numerics::Shape shape{g.length(), g.dim()};
    if (opt.latents) {
      if (opt.latents->shape() != shape) {
        throw ModelError("explicit latents have shape " + numerics::shape_to_string(opt.latents->shape()) +
                         ", expected " + numerics::shape_to_string(shape));
      }
      return ops::constant(*opt.latents);
    }
    Tensor noise(shape, 0.0);
    if (opt.noise) {
      if (opt.noise->shape() != shape) {
        throw ModelError("noise has shape " + numerics::shape_to_string(opt.noise->shape()) +
                         ", expected " + numerics::shape_to_string(shape));
      }
      noise = *opt.noise;
    } else if (!opt.zero_noise) {
      if (!opt.rng) throw ModelError("latent sampling needs a noise source");
      for (auto& v : noise.values()) v = opt.rng->normal();
    }
    return latent::reparameterize(g, noise);
  };

  Var h;
  switch (c.kind) {
    case ModelKind::Tlm:
      h = run_stack(input, params_.decoder_stack, causal, drop, opt.alignments, "decoder");
      break;
    case ModelKind::Tvae: {
      const int kw[] = {poem.keyword};
      trace.keyword_embedding = ops::embedding(params_.embedding, kw);
      trace.prior = latent::project_gaussian(trace.keyword_embedding, params_.prior_mlp);
      if (train) {
        std::vector<int> enc_ids{Vocabulary::kCls};
        enc_ids.insert(enc_ids.end(), poem.tokens.begin(), poem.tokens.end());
        const MaskSet open = MaskSet::build(SegmentLayout(1, poem.tokens, Vocabulary::kSep), false);
        Var enc = run_stack(drop.apply(embed(enc_ids)), params_.recognition_stack, open, drop,
                            opt.alignments, "encoder");
        trace.o_r = ops::slice_rows(enc, 0, 1);
        trace.posterior = latent::project_gaussian(
            ops::concat_cols({trace.o_r, trace.keyword_embedding}), params_.recognition_mlp);
        trace.z = sample(*trace.posterior);
      } else {
        trace.z = sample(*trace.prior);
      }
      Var zd = params_.latent_proj.defined() ? ops::linear(trace.z, params_.latent_proj) : trace.z;
      Var start = ops::add(ops::slice_rows(input, 1, 2), zd);
      std::vector<Var> rows{ops::slice_rows(input, 0, 1), start};
      if (T > 1) rows.push_back(ops::slice_rows(input, 2, T + 1));
      Var dec = ops::concat_rows(rows);
      h = run_stack(dec, params_.decoder_stack, causal, drop, opt.alignments, "decoder");
      break;
    }
    case ModelKind::WakaVT: {
      Var o_p_full = run_stack(input, params_.prior_stack, causal, drop, opt.alignments, "prior");
      trace.o_p = ops::slice_rows(o_p_full, 1, T + 1);
      trace.prior = latent::project_gaussian(trace.o_p, params_.prior_mlp);
      if (train) {
        std::vector<int> rec_ids{poem.keyword};
        rec_ids.insert(rec_ids.end(), poem.tokens.begin(), poem.tokens.end());
        const MaskSet open = MaskSet::build(SegmentLayout(1, poem.tokens, Vocabulary::kSep), false);
        Var o_r_full = run_stack(drop.apply(embed(rec_ids)), params_.recognition_stack, open, drop,
                                 opt.alignments, "recognition");
        trace.o_r = ops::slice_rows(o_r_full, 1, T + 1);
        trace.posterior = latent::project_gaussian(trace.o_r, params_.recognition_mlp);
        trace.z = sample(*trace.posterior);
      } else {
        trace.z = sample(*trace.prior);
      }
      Var fused = latent::fuse_latent(trace.z, trace.o_p, params_.fusion, drop);
      // The keyword row carries no latent.
      Var head = attention::apply_layer_norm(ops::slice_rows(o_p_full, 0, 1), params_.fusion.norm);
      trace.o_m = fused;
      h = run_stack(ops::concat_rows({head, fused}), params_.decoder_stack, causal, drop,
                    opt.alignments, "decoder");
      break;
    }
  }
  trace.logits = ops::linear(ops::slice_rows(h, 1, T + 1), params_.out_w, params_.out_b);
  return trace;
}

std::size_t Model::load_embeddings(const std::string& path, const corpus::Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  const std::size_t d = config_.d_model;
  Tensor& table = params_.embedding.node()->value;
  std::string line;
  std::size_t line_no = 0, loaded = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (line_no == 1 && values.size() == 1) continue;  // "count dim" header
    if (word.empty()) continue;
    if (values.size() != d) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(d) + " values");
    }
    auto id = vocab.find(word);
    if (!id || static_cast<std::size_t>(*id) >= vocab_size_) continue;
    std::copy(values.begin(), values.end(), table.row(static_cast<std::size_t>(*id)).begin());
    ++loaded;
  }
  return loaded;
}

}  // namespace wakavt::models
