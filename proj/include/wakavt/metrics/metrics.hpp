// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wakavt/constraint/morae.hpp"
#include "wakavt/corpus/vocabulary.hpp"
#include "wakavt/models/model.hpp"

namespace wakavt::metrics {

using corpus::Poem;

/// Set: distinct word types. Multiset: word counts.
enum class DiceMode { Set, Multiset };

/// Sorted content-word ids of a poem; separators and specials are dropped.
std::vector<int> word_bag(const Poem& poem, DiceMode mode = DiceMode::Set);

/// 2|A∩B| / (|A|+|B|); two empty bags score 1.
double dice(std::span<const int> a, std::span<const int> b);
double dice(const Poem& a, const Poem& b, DiceMode mode = DiceMode::Set);

/// Inverted word -> poem index answering max-Dice queries. Poems sharing no
/// word with the query are never visited.
class DiceIndex {
 public:
  DiceIndex(std::span<const Poem> poems, DiceMode mode = DiceMode::Set);

  std::size_t size() const { return sizes_.size(); }
  /// Highest Dice against any indexed poem other than `exclude`.
  double max_dice(const Poem& query, std::optional<std::size_t> exclude = std::nullopt) const;

 private:
  struct Posting {
    std::uint32_t poem;
    std::uint32_t count;
  };
  DiceMode mode_;
  std::map<int, std::vector<Posting>> postings_;
  std::vector<std::uint32_t> sizes_;
};

/// Mean over S of 1 - max_j Dice(S_i, C_j).
double novelty_word(std::span<const Poem> generated, const DiceIndex& corpus);
double novelty_word(std::span<const Poem> generated, std::span<const Poem> corpus,
                    DiceMode mode = DiceMode::Set);
/// Mean over S of 1 - max_{j != i} Dice(S_i, S_j). Needs |S| >= 2.
double diversity_word(std::span<const Poem> generated, DiceMode mode = DiceMode::Set);

using Phrase = std::vector<int>;

struct PhraseSet {
  std::map<Phrase, std::size_t> counts;
  std::size_t skipped = 0;  // poems failing the morae pattern

  std::size_t distinct() const { return counts.size(); }
  std::size_t occurrences() const;
};

/// n = 5 keeps phrases 1 and 3 of each valid poem, n = 7 phrases 2, 4, 5.
PhraseSet extract_phrases(std::span<const Poem> poems, int n, const constraint::MoraeTable& table);

/// |Phr(S) - Phr(C)| / |Phr(S)|.
double novelty_phrase(const PhraseSet& generated, const PhraseSet& corpus);
/// |Phr(S)| / total occurrences.
double diversity_phrase(const PhraseSet& generated);

struct PplKld {
  double ppl = 0.0;
  std::optional<double> kld;  // absent for models without latents
  std::size_t tokens = 0;
};

/// Posterior-sampled reconstruction without dropout. PPL is exp of the mean
/// per-token NLL; KLD is the mean per-poem summed KL.
PplKld eval_ppl_kld(const models::Model& model, std::span<const Poem> test, std::uint64_t seed);

struct MetricReport {
  double nov_w = 0, nov_s5 = 0, nov_s7 = 0;
  double div_w = 0, div_s5 = 0, div_s7 = 0;
  std::optional<double> ppl, kld;
  std::size_t skipped = 0;
};

MetricReport evaluate_generations(std::span<const Poem> generated, std::span<const Poem> corpus,
                                  const constraint::MoraeTable& table,
                                  DiceMode mode = DiceMode::Set);

nlohmann::json to_json(const MetricReport& report);

}  // namespace wakavt::metrics
