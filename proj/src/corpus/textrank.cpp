// SPDX-License-Identifier: Apache-2.0
#include "wakavt/corpus/textrank.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace wakavt::corpus {

TextRankResult textrank(std::span<const int> words, const TextRankOptions& options) {
  if (words.empty()) throw std::invalid_argument("textrank: no content words");
  if (options.window < 2) throw std::invalid_argument("textrank: window must be at least 2");

  TextRankResult r;
  std::unordered_map<int, std::size_t> node_of;
  std::vector<std::size_t> seq;
  for (int w : words) {
    auto [it, inserted] = node_of.emplace(w, r.nodes.size());
    if (inserted) r.nodes.push_back(w);
    seq.push_back(it->second);
  }
  const std::size_t n = r.nodes.size();
  std::vector<double> weight(n * n, 0.0);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t j = i + 1; j < seq.size() && j - i < options.window; ++j) {
      if (seq[i] == seq[j]) continue;
      weight[seq[i] * n + seq[j]] += 1.0;
      weight[seq[j] * n + seq[i]] += 1.0;
    }
  }
  std::vector<double> out_sum(n, 0.0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) out_sum[u] += weight[u * n + v];

  const double d = options.damping;
  r.scores.assign(n, 1.0);
  std::vector<double> next(n);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      double s = 0.0;
      for (std::size_t u = 0; u < n; ++u) {
        if (out_sum[u] > 0.0) s += weight[u * n + v] / out_sum[u] * r.scores[u];
      }
      next[v] = (1.0 - d) + d * s;
      change = std::max(change, std::abs(next[v] - r.scores[v]));
    }
    r.scores.swap(next);
    r.iterations = it + 1;
    if (change < options.tolerance) {
      r.converged = true;
      break;
    }
  }

  std::size_t best = 0;
  for (std::size_t v = 1; v < n; ++v) {
    // Scores within rounding of each other count as tied.
    if (r.scores[v] > r.scores[best] + 1e-12) best = v;
  }
  r.best = r.nodes[best];
  return r;
}

int textrank_keyword(std::span<const int> tokens, const constraint::MoraeTable& table,
                     const TextRankOptions& options) {
  std::vector<int> content;
  for (int t : tokens)
    if (table.is_content(t)) content.push_back(t);
  return textrank(content, options).best;
}

}  // namespace wakavt::corpus
