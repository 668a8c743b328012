// SPDX-License-Identifier: Apache-2.0
#include "wakavt/decoding/beam_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wakavt::decoding {

using corpus::Vocabulary;
using models::ModelKind;

Tensor sample_prior_step(const models::PendingStep& pending, numerics::Rng& rng, bool zero_noise) {
  if (!pending.prior) throw std::invalid_argument("pending step carries no prior");
  const auto& prior = *pending.prior;
  Tensor noise({prior.dim()}, 0.0);
  if (!zero_noise)
    for (auto& v : noise.values()) v = rng.normal();
  return latent::reparameterize(prior, noise).reshaped({1, prior.dim()});
}

Tensor result_latents(const GenerationResult& result) {
  if (!result.poem_latent.empty()) return result.poem_latent;
  if (result.latents.empty()) return {};
  const std::size_t d = result.latents.front()->size();
  Tensor out({result.latents.size(), d});
  for (std::size_t t = 0; t < result.latents.size(); ++t) {
    const auto row = result.latents[t]->values();
    std::copy(row.begin(), row.end(), out.row(t).begin());
  }
  return out;
}

namespace {

struct Candidate {
  double score;
  int token;
  std::size_t beam;
};

std::vector<double> log_softmax(std::span<const double> logits, std::span<const double> mask) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j) hi = std::max(hi, logits[j] + mask[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) sum += std::exp(logits[j] + mask[j] - hi);
  const double lse = hi + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) out[j] = logits[j] + mask[j] - lse;
  return out;
}

}  // namespace

GenerationResult beam_search_generate(const models::Model& model,
                                      const constraint::MoraeTable& table, int keyword,
                                      const GenerationConfig& config) {
  if (config.beam_width == 0) throw std::invalid_argument("beam width must be at least 1");
  if (table.size() != model.vocab_size()) {
    throw std::invalid_argument("morae table covers " + std::to_string(table.size()) +
                                " ids, model vocabulary has " + std::to_string(model.vocab_size()));
  }
  const auto kind = model.config().kind;
  const models::IncrementalDecoder decoder(model);
  numerics::Rng rng(config.seed);

  Tensor poem_latent;
  if (kind == ModelKind::Tvae) {
    const auto prior = decoder.keyword_prior(keyword);
    Tensor noise({prior.dim()}, 0.0);
    if (!config.zero_noise)
      for (auto& v : noise.values()) v = rng.normal();
    poem_latent = latent::reparameterize(prior, noise).reshaped({1, prior.dim()});
  }

  std::vector<Beam> live(1);
  live[0].state = decoder.begin(keyword, kind == ModelKind::Tvae ? &poem_latent : nullptr);
  std::vector<Beam> finished;

  for (std::size_t step = 0; step <= config.max_length && !live.empty(); ++step) {
    std::vector<Candidate> candidates;
    std::vector<models::StepOutput> outputs(live.size());
    std::vector<std::shared_ptr<const Tensor>> step_latents(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      const Beam& b = live[i];
      if (b.budget.finished) {
        // Only the end token is admissible; its log-probability is 0.
        candidates.push_back({b.score, Vocabulary::kEnd, i});
        continue;
      }
      if (step == config.max_length) continue;
      const int input = b.tokens.empty() ? Vocabulary::kStart : b.tokens.back();
      const auto pending = decoder.feed(b.state, input);
      if (kind == ModelKind::WakaVT) {
        step_latents[i] = std::make_shared<const Tensor>(
            sample_prior_step(pending, rng, config.zero_noise));
      }
      outputs[i] = decoder.complete(pending, step_latents[i].get());
      const auto mask = constraint::additive_mask(b.budget, table);
      const auto logp = log_softmax(outputs[i].logits.values(), mask);
      for (std::size_t y = 0; y < logp.size(); ++y)
        if (std::isfinite(mask[y])) candidates.push_back({b.score + logp[y], static_cast<int>(y), i});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.token != b.token) return a.token < b.token;
      return a.beam < b.beam;
    });
    if (candidates.size() > config.beam_width) candidates.resize(config.beam_width);

    std::vector<Beam> next;
    for (const auto& c : candidates) {
      const Beam& parent = live[c.beam];
      if (c.token == Vocabulary::kEnd) {
        Beam done = parent;
        done.score = c.score;
        done.finished = true;
        finished.push_back(std::move(done));
        continue;
      }
      Beam b;
      b.state = outputs[c.beam].state;
      b.budget = constraint::advance_budget(parent.budget, c.token, table);
      b.latents = parent.latents;
      if (step_latents[c.beam]) b.latents.push_back(step_latents[c.beam]);
      b.tokens = parent.tokens;
      b.tokens.push_back(c.token);
      b.score = c.score;
      next.push_back(std::move(b));
    }
    live = std::move(next);
    if (finished.size() >= config.beam_width) break;
  }

  GenerationResult best;
  bool found = false;
  for (const auto& b : finished) {
    const bool has_kw = std::find(b.tokens.begin(), b.tokens.end(), keyword) != b.tokens.end();
    if (config.strict_keyword && !has_kw) continue;
    const double norm =
        b.score / std::pow(static_cast<double>(b.tokens.size()), config.length_exponent);
    if (!found || std::pair(has_kw, norm) > std::pair(best.contains_keyword, best.normalized_score)) {
      best.poem = {b.tokens, keyword};
      best.score = b.score;
      best.normalized_score = norm;
      best.contains_keyword = has_kw;
      best.latents = b.latents;
      found = true;
    }
  }
  if (!found) {
    throw GenerationError("no beam finished for keyword id " + std::to_string(keyword) +
                          (config.strict_keyword && !finished.empty()
                               ? " (none of the finished beams contains the keyword)"
                               : ""));
  }
  best.poem_latent = poem_latent;
  best.finished = std::move(finished);
  return best;
}

std::vector<GenerationResult> generate_all(const models::Model& model,
                                           const constraint::MoraeTable& table,
                                           std::span<const int> keywords,
                                           const GenerationConfig& config) {
  std::vector<GenerationResult> out;
  out.reserve(keywords.size());
  for (std::size_t i = 0; i < keywords.size(); ++i) {
    GenerationConfig c = config;
    c.seed = numerics::mix_seed(config.seed, i);
    out.push_back(beam_search_generate(model, table, keywords[i], c));
  }
  return out;
}

}  // namespace wakavt::decoding
