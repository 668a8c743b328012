// SPDX-License-Identifier: Apache-2.0
#include "wakavt/corpus/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "wakavt/constraint/morae.hpp"
#include "wakavt/corpus/textrank.hpp"
#include "wakavt/numerics/random.hpp"

namespace wakavt::corpus {

namespace {

constexpr const char* kKana[] = {
    "あ", "い", "う", "え", "お", "か", "き", "く", "け", "こ", "さ", "し", "す", "せ", "そ", "た",
    "ち", "つ", "て", "と", "な", "に", "ぬ", "ね", "の", "は", "ひ", "ふ", "へ", "ほ", "ま", "み",
    "む", "め", "も", "や", "ゆ", "よ", "ら", "り", "る", "れ", "ろ", "わ", "を", "ん"};
constexpr std::size_t kKanaCount = sizeof(kKana) / sizeof(kKana[0]);

int sample_morae(numerics::Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.20) return 1;
  if (u < 0.55) return 2;
  if (u < 0.80) return 3;
  if (u < 0.93) return 4;
  return 5;
}

}  // namespace

ToyVocabSpec make_toy_vocab(std::size_t n_words, std::uint64_t seed) {
  if (n_words < 2) throw std::invalid_argument("toy vocabulary needs at least 2 words");
  numerics::Rng rng(seed, 0x70c4b);
  ToyVocabSpec spec;
  std::unordered_set<std::string> seen;
  while (spec.words.size() < n_words) {
    int m = spec.words.empty() ? 1 : (spec.words.size() == 1 ? 2 : sample_morae(rng));
    // Single kana run out quickly; longer words are plentiful.
    if (m == 1 && seen.size() >= kKanaCount / 2) m = 2;
    std::string text;
    for (int i = 0; i < m; ++i) text += kKana[rng.uniform_int(kKanaCount)];
    if (!seen.insert(text).second) continue;
    spec.words.push_back({std::move(text), m});
  }
  return spec;
}

std::vector<SyntheticPoem> generate_synthetic_poems(std::size_t size, const ToyVocabSpec& spec,
                                                    std::uint64_t seed) {
  const std::size_t n = spec.words.size();
  const std::size_t topics = std::max<std::size_t>(1, spec.topics);
  bool has_unit = false;
  for (const auto& w : spec.words) has_unit = has_unit || w.morae == 1;
  if (!has_unit) throw std::invalid_argument("toy vocabulary lacks a 1-morae word");

  // cumulative[topic][limit-1]: cumulative weights over words with morae <= limit.
  constexpr int kMaxLimit = 7;
  std::vector<std::vector<std::vector<double>>> cumulative(
      topics, std::vector<std::vector<double>>(kMaxLimit, std::vector<double>(n)));
  for (std::size_t t = 0; t < topics; ++t) {
    for (int limit = 1; limit <= kMaxLimit; ++limit) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (spec.words[i].morae <= limit) {
          double w = 1.0 / std::pow(static_cast<double>(i + 1), spec.zipf_exponent);
          if (i % topics == t) w *= spec.topic_boost;
          acc += w;
        }
        cumulative[t][limit - 1][i] = acc;
      }
    }
  }

  numerics::Rng rng(seed, 0x5e7);
  std::vector<SyntheticPoem> poems;
  poems.reserve(size);
  for (std::size_t k = 0; k < size; ++k) {
    SyntheticPoem poem;
    const std::size_t topic = rng.uniform_int(topics);
    int prev = -1;
    for (int phrase = 0; phrase < constraint::kPhraseCount; ++phrase) {
      if (phrase > 0) poem.words.push_back(-1);
      int remaining = constraint::kPhraseBudgets[phrase];
      while (remaining > 0) {
        int next = -1;
        if (prev >= 0 && rng.uniform() < spec.successor_prob) {
          const auto succ = static_cast<int>((7 * static_cast<std::size_t>(prev) + 3) % n);
          if (spec.words[succ].morae <= remaining) next = succ;
        }
        if (next < 0) {
          const auto& cum = cumulative[topic][std::min(remaining, kMaxLimit) - 1];
          const double r = rng.uniform() * cum.back();
          next = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin());
          next = std::min(next, static_cast<int>(n) - 1);
        }
        poem.words.push_back(next);
        remaining -= spec.words[next].morae;
        prev = next;
      }
    }
    std::vector<int> content;
    for (int w : poem.words)
      if (w >= 0) content.push_back(w);
    poem.keyword = textrank(content).best;
    poems.push_back(std::move(poem));
  }
  return poems;
}

std::string generate_synthetic_corpus(std::size_t size, const ToyVocabSpec& spec,
                                      std::uint64_t seed) {
  std::string out;
  for (const auto& p : generate_synthetic_poems(size, spec, seed)) {
    out += spec.words[p.keyword].text;
    out += '\t';
    for (std::size_t i = 0; i < p.words.size(); ++i) {
      if (i) out += ' ';
      if (p.words[i] < 0) {
        out += '|';
      } else {
        out += spec.words[p.words[i]].text;
        out += ':';
        out += std::to_string(spec.words[p.words[i]].morae);
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace wakavt::corpus
