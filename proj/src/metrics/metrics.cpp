// SPDX-License-Identifier: Apache-2.0
#include "wakavt/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wakavt/models/training.hpp"

namespace wakavt::metrics {

using corpus::Vocabulary;

std::vector<int> word_bag(const Poem& poem, DiceMode mode) {
  std::vector<int> bag;
  for (int t : poem.tokens)
    if (!Vocabulary::is_special(t)) bag.push_back(t);
  std::sort(bag.begin(), bag.end());
  if (mode == DiceMode::Set) bag.erase(std::unique(bag.begin(), bag.end()), bag.end());
  return bag;
}

double dice(std::span<const int> a, std::span<const int> b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++common, ++i, ++j;
    }
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

double dice(const Poem& a, const Poem& b, DiceMode mode) {
  return dice(word_bag(a, mode), word_bag(b, mode));
}

namespace {

// (word, count) runs of a sorted bag.
std::vector<std::pair<int, std::uint32_t>> runs(const std::vector<int>& bag) {
  std::vector<std::pair<int, std::uint32_t>> out;
  for (int w : bag) {
    if (!out.empty() && out.back().first == w) {
      ++out.back().second;
    } else {
      out.emplace_back(w, 1);
    }
  }
  return out;
}

}  // namespace

DiceIndex::DiceIndex(std::span<const Poem> poems, DiceMode mode) : mode_(mode) {
  sizes_.reserve(poems.size());
  for (std::size_t i = 0; i < poems.size(); ++i) {
    const auto bag = word_bag(poems[i], mode);
    sizes_.push_back(static_cast<std::uint32_t>(bag.size()));
    for (auto [w, c] : runs(bag)) postings_[w].push_back({static_cast<std::uint32_t>(i), c});
  }
}

double DiceIndex::max_dice(const Poem& query, std::optional<std::size_t> exclude) const {
  const auto bag = word_bag(query, mode_);
  const double qn = static_cast<double>(bag.size());
  double best = 0.0;
  if (bag.empty()) {
    // Only another empty poem overlaps an empty one.
    for (std::size_t i = 0; i < sizes_.size(); ++i)
      if (sizes_[i] == 0 && exclude != i) return 1.0;
    return 0.0;
  }
  std::vector<std::uint32_t> overlap(sizes_.size(), 0);
  std::vector<std::uint32_t> touched;
  for (auto [w, c] : runs(bag)) {
    auto it = postings_.find(w);
    if (it == postings_.end()) continue;
    for (const auto& p : it->second) {
      if (overlap[p.poem] == 0) touched.push_back(p.poem);
      overlap[p.poem] += std::min(c, p.count);
    }
  }
  for (std::uint32_t i : touched) {
    if (exclude == i) continue;
    best = std::max(best, 2.0 * overlap[i] / (qn + sizes_[i]));
  }
  return best;
}

double novelty_word(std::span<const Poem> generated, const DiceIndex& corpus) {
  if (generated.empty()) throw std::invalid_argument("novelty needs at least one generated poem");
  if (corpus.size() == 0) throw std::invalid_argument("novelty needs a non-empty corpus");
  double sum = 0.0;
  for (const auto& p : generated) sum += 1.0 - corpus.max_dice(p);
  return sum / static_cast<double>(generated.size());
}

double novelty_word(std::span<const Poem> generated, std::span<const Poem> corpus, DiceMode mode) {
  return novelty_word(generated, DiceIndex(corpus, mode));
}

double diversity_word(std::span<const Poem> generated, DiceMode mode) {
  if (generated.size() < 2) throw std::invalid_argument("diversity needs at least two poems");
  const DiceIndex index(generated, mode);
  double sum = 0.0;
  for (std::size_t i = 0; i < generated.size(); ++i) sum += 1.0 - index.max_dice(generated[i], i);
  return sum / static_cast<double>(generated.size());
}

std::size_t PhraseSet::occurrences() const {
  std::size_t n = 0;
  for (const auto& [p, c] : counts) n += c;
  return n;
}

PhraseSet extract_phrases(std::span<const Poem> poems, int n, const constraint::MoraeTable& table) {
  if (n != 5 && n != 7) throw std::invalid_argument("phrase length must be 5 or 7 morae");
  PhraseSet set;
  for (const auto& poem : poems) {
    const auto check = constraint::validate_pattern(poem.tokens, table);
    if (!check.valid) {
      ++set.skipped;
      continue;
    }
    std::vector<Phrase> phrases(1);
    for (int t : poem.tokens) {
      if (t == table.sep()) {
        phrases.emplace_back();
      } else {
        phrases.back().push_back(t);
      }
    }
    for (std::size_t i = 0; i < phrases.size(); ++i)
      if (constraint::kPhraseBudgets[i] == n) ++set.counts[phrases[i]];
  }
  return set;
}

double novelty_phrase(const PhraseSet& generated, const PhraseSet& corpus) {
  if (generated.counts.empty()) throw std::invalid_argument("no phrases in the generated poems");
  std::size_t fresh = 0;
  for (const auto& [p, c] : generated.counts)
    if (!corpus.counts.count(p)) ++fresh;
  return static_cast<double>(fresh) / static_cast<double>(generated.distinct());
}

double diversity_phrase(const PhraseSet& generated) {
  if (generated.counts.empty()) throw std::invalid_argument("no phrases in the generated poems");
  return static_cast<double>(generated.distinct()) / static_cast<double>(generated.occurrences());
}

PplKld eval_ppl_kld(const models::Model& model, std::span<const Poem> test, std::uint64_t seed) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  numerics::NoGradGuard guard;
  numerics::Rng rng(seed);
  models::ForwardOptions opt;
  opt.mode = numerics::Mode::Train;
  opt.dropout = false;
  opt.rng = &rng;
  double nll = 0.0, kl = 0.0;
  PplKld out;
  for (const auto& poem : test) {
    const auto trace = model.forward(poem, opt);
    const auto terms = models::compute_loss(model, trace, 1.0);
    nll += terms.nll.value().item();
    kl += terms.kl.value().item();
    out.tokens += trace.targets.size();
  }
  out.ppl = std::exp(nll / static_cast<double>(out.tokens));
  if (model.config().has_latent()) out.kld = kl / static_cast<double>(test.size());
  return out;
}

MetricReport evaluate_generations(std::span<const Poem> generated, std::span<const Poem> corpus,
                                  const constraint::MoraeTable& table, DiceMode mode) {
  MetricReport r;
  r.nov_w = novelty_word(generated, corpus, mode);
  r.div_w = diversity_word(generated, mode);
  const auto s5 = extract_phrases(generated, 5, table);
  const auto s7 = extract_phrases(generated, 7, table);
  const auto c5 = extract_phrases(corpus, 5, table);
  const auto c7 = extract_phrases(corpus, 7, table);
  r.nov_s5 = novelty_phrase(s5, c5);
  r.nov_s7 = novelty_phrase(s7, c7);
  r.div_s5 = diversity_phrase(s5);
  r.div_s7 = diversity_phrase(s7);
  r.skipped = s5.skipped;
  return r;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j{{"nov_w", r.nov_w},   {"nov_s5", r.nov_s5}, {"nov_s7", r.nov_s7},
                   {"div_w", r.div_w},   {"div_s5", r.div_s5}, {"div_s7", r.div_s7},
                   {"ppl", nullptr},     {"kld", nullptr},     {"skipped", r.skipped}};
  if (r.ppl) j["ppl"] = *r.ppl;
  if (r.kld) j["kld"] = *r.kld;
  return j;
}

}  // namespace wakavt::metrics
