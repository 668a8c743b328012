// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace wakavt::constraint {

/// Morae budgets of the five phrases: 5-7-5-7-7.
inline constexpr std::array<int, 5> kPhraseBudgets{5, 7, 5, 7, 7};
inline constexpr int kPhraseCount = 5;
inline constexpr int kTotalMorae = 31;
/// Morae count assigned to the unknown-word token; larger than any budget.
inline constexpr int kUnknownMorae = 8;

class ConstraintError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};
class BudgetViolation : public ConstraintError {
 public:
  using ConstraintError::ConstraintError;
};
class PrematureSeparator : public ConstraintError {
 public:
  using ConstraintError::ConstraintError;
};

/**
 * Morae count s(w) per vocabulary id, plus which ids are special.
 *
 * The separator and every special token have zero morae except the
 * unknown-word token, which carries kUnknownMorae so it can never fit a
 * budget.
 */
class MoraeTable {
 public:
  MoraeTable() = default;
  MoraeTable(std::vector<int> counts, int sep_id, int end_id, std::vector<int> special_ids);

  int morae(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  bool is_special(int id) const { return special_.at(static_cast<std::size_t>(id)); }
  bool is_content(int id) const { return !is_special(id); }
  int sep() const { return sep_; }
  int end() const { return end_; }
  std::size_t size() const { return counts_.size(); }
  /// True when some content word has exactly one mora (no dead ends).
  bool has_unit_word() const;

 private:
  std::vector<int> counts_;
  std::vector<bool> special_;
  int sep_ = -1;
  int end_ = -1;
};

/// Remaining-morae automaton state.
struct BudgetState {
  int phrase = 0;
  int remaining = kPhraseBudgets[0];
  bool finished = false;

  bool operator==(const BudgetState&) const = default;
};

/// Consumes one token. Throws BudgetViolation for an over-budget word or a
/// token that is not admissible in this state, PrematureSeparator for a
/// separator while morae remain.
BudgetState advance_budget(const BudgetState& state, int word, const MoraeTable& table);

/// Whether the additive mask leaves `word` at 0 in this state.
bool admissible(const BudgetState& state, int word, const MoraeTable& table);

/// The additive vocabulary mask: 0 for admissible tokens, -inf otherwise.
/// A finished state admits only the end token; an exhausted phrase admits
/// only the separator.
std::vector<double> additive_mask(const BudgetState& state, const MoraeTable& table);

struct PatternCheck {
  bool valid = false;
  /// Positions of the four separators in the token sequence.
  std::array<std::size_t, 4> boundaries{};
};

/// Checks that `tokens` splits on exactly four separators into phrases of
/// 5, 7, 5, 7 and 7 morae made of content words only.
PatternCheck validate_pattern(std::span<const int> tokens, const MoraeTable& table);

}  // namespace wakavt::constraint
