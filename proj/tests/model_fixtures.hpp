// SPDX-License-Identifier: Apache-2.0
#pragma once

// Toy vocabularies, poems and model sizes shared by the model-level suites.

#include <sstream>
#include <string>
#include <vector>

#include "wakavt/corpus/corpus.hpp"
#include "wakavt/corpus/synthetic.hpp"
#include "wakavt/models/config.hpp"

namespace wakavt::test_support {

struct ToyData {
  corpus::Vocabulary vocab;
  std::vector<corpus::Poem> poems;
};

inline ToyData synthetic_data(std::size_t poems, std::size_t words, std::uint64_t seed) {
  const auto spec = corpus::make_toy_vocab(words, seed);
  std::istringstream in(corpus::generate_synthetic_corpus(poems, spec, seed));
  const auto lines = corpus::parse_corpus(in, "synthetic");
  ToyData d{corpus::build_vocab(lines), {}};
  d.poems = corpus::encode_corpus(lines, d.vocab).poems;
  return d;
}

/// Six content words; `poem12()` is a valid 12-token poem over them.
inline ToyData hand_data() {
  ToyData d;
  const int a = d.vocab.add("a", 5), b = d.vocab.add("b", 2), c = d.vocab.add("c", 3);
  const int dd = d.vocab.add("d", 4), e = d.vocab.add("e", 7);
  d.vocab.add("f", 1);
  const int s = corpus::Vocabulary::kSep;
  d.poems.push_back({{a, s, c, dd, s, b, c, s, e, s, dd, c}, c});
  return d;
}

inline models::ModelConfig tiny_config(models::ModelKind kind, attention::AttentionKind att) {
  auto c = models::ModelConfig::defaults(kind);
  c.attention = att;
  c.d_model = 8;
  c.heads = 2;
  c.ff_inner = 16;
  c.n1 = 1;
  c.n2 = 1;
  c.d_latent = 4;
  c.dropout = 0.0;
  return c;
}

}  // namespace wakavt::test_support
