// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wakavt::corpus {

struct ToyWord {
  std::string text;
  int morae = 1;
};

/**
 * Word list and sampling knobs for synthetic corpora.
 *
 * Word i has base weight 1/(i+1)^zipf_exponent, is boosted by topic_boost
 * when i % topics matches the poem's topic, and with probability
 * successor_prob the walk takes word (7i+3) mod n after word i when it fits.
 */
struct ToyVocabSpec {
  std::vector<ToyWord> words;
  std::size_t topics = 4;
  double zipf_exponent = 1.0;
  double topic_boost = 6.0;
  double successor_prob = 0.35;
};

/// `n_words` distinct kana words with 1..5 morae; word 0 has one mora.
ToyVocabSpec make_toy_vocab(std::size_t n_words, std::uint64_t seed);

/// A poem as indices into ToyVocabSpec::words, with -1 for separators.
struct SyntheticPoem {
  std::vector<int> words;
  int keyword = -1;
};

std::vector<SyntheticPoem> generate_synthetic_poems(std::size_t size, const ToyVocabSpec& spec,
                                                    std::uint64_t seed);

/// The same poems rendered in the corpus file format, keyword column included.
std::string generate_synthetic_corpus(std::size_t size, const ToyVocabSpec& spec,
                                      std::uint64_t seed);

}  // namespace wakavt::corpus
