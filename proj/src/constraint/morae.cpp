// SPDX-License-Identifier: Apache-2.0
#include "wakavt/constraint/morae.hpp"

#include <limits>
#include <string>

namespace wakavt::constraint {

MoraeTable::MoraeTable(std::vector<int> counts, int sep_id, int end_id,
                       std::vector<int> special_ids)
    : counts_(std::move(counts)), special_(counts_.size(), false), sep_(sep_id), end_(end_id) {
  auto in_range = [&](int id) { return id >= 0 && static_cast<std::size_t>(id) < counts_.size(); };
  if (!in_range(sep_id) || !in_range(end_id)) {
    throw std::invalid_argument("separator/end id outside the morae table");
  }
  special_[sep_id] = true;
  special_[end_id] = true;
  for (int id : special_ids) {
    if (!in_range(id)) throw std::invalid_argument("special id outside the morae table");
    special_[id] = true;
  }
  if (counts_[sep_id] != 0) throw std::invalid_argument("separator must have zero morae");
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] < 0) throw std::invalid_argument("negative morae count");
    if (!special_[i] && counts_[i] == 0) {
      throw std::invalid_argument("content word " + std::to_string(i) + " has zero morae");
    }
  }
}

bool MoraeTable::has_unit_word() const {
  for (std::size_t i = 0; i < counts_.size(); ++i)
    if (!special_[i] && counts_[i] == 1) return true;
  return false;
}

bool admissible(const BudgetState& state, int word, const MoraeTable& table) {
  if (state.finished) return word == table.end();
  if (state.remaining == 0) return word == table.sep();
  if (table.is_special(word)) return false;
  return table.morae(word) <= state.remaining;
}

BudgetState advance_budget(const BudgetState& state, int word, const MoraeTable& table) {
  if (state.finished) {
    if (word == table.end()) return state;
    throw BudgetViolation("poem is complete; only the end token may follow");
  }
  if (word == table.sep()) {
    if (state.remaining > 0) {
      throw PrematureSeparator("separator with " + std::to_string(state.remaining) +
                               " morae left in phrase " + std::to_string(state.phrase));
    }
    return {state.phrase + 1, kPhraseBudgets[state.phrase + 1], false};
  }
  if (table.is_special(word)) {
    throw BudgetViolation("special token " + std::to_string(word) + " inside the poem body");
  }
  if (state.remaining == 0) {
    throw BudgetViolation("phrase " + std::to_string(state.phrase) + " is full; expected separator");
  }
  const int s = table.morae(word);
  if (s > state.remaining) {
    throw BudgetViolation("word " + std::to_string(word) + " needs " + std::to_string(s) +
                          " morae, only " + std::to_string(state.remaining) + " left");
  }
  BudgetState next{state.phrase, state.remaining - s, false};
  if (next.remaining == 0 && next.phrase == kPhraseCount - 1) next.finished = true;
  return next;
}

std::vector<double> additive_mask(const BudgetState& state, const MoraeTable& table) {
  std::vector<double> mask(table.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < table.size(); ++j) {
    if (admissible(state, static_cast<int>(j), table)) mask[j] = 0.0;
  }
  return mask;
}

PatternCheck validate_pattern(std::span<const int> tokens, const MoraeTable& table) {
  PatternCheck result;
  std::size_t phrase = 0;
  int sum = 0;
  bool phrase_has_word = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int tok = tokens[i];
    if (tok < 0 || static_cast<std::size_t>(tok) >= table.size()) return {};
    if (tok == table.sep()) {
      if (phrase >= 4 || !phrase_has_word || sum != kPhraseBudgets[phrase]) return {};
      result.boundaries[phrase] = i;
      ++phrase;
      sum = 0;
      phrase_has_word = false;
      continue;
    }
    if (table.is_special(tok)) return {};
    sum += table.morae(tok);
    phrase_has_word = true;
  }
  if (phrase != 4 || !phrase_has_word || sum != kPhraseBudgets[4]) return {};
  result.valid = true;
  return result;
}

}  // namespace wakavt::constraint
