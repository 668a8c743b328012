// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wakavt/constraint/morae.hpp"

namespace wakavt::corpus {

struct TextRankOptions {
  std::size_t window = 2;  // tokens i, j co-occur when |i - j| < window
  double damping = 0.85;
  std::size_t iterations = 30;
  double tolerance = 1e-8;
};

struct TextRankResult {
  std::vector<int> nodes;  // distinct words in first-seen order
  std::vector<double> scores;
  std::size_t iterations = 0;
  bool converged = false;
  int best = -1;
};

/// Power iteration over the undirected co-occurrence graph of `words`.
/// Ties go to the word seen first. Throws on an empty sequence.
TextRankResult textrank(std::span<const int> words, const TextRankOptions& options = {});

/// Keyword of a poem body: TextRank over its content words.
int textrank_keyword(std::span<const int> tokens, const constraint::MoraeTable& table,
                     const TextRankOptions& options = {});

}  // namespace wakavt::corpus
