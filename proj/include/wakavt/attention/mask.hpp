// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "wakavt/numerics/tensor.hpp"

namespace wakavt::attention {

enum class MaskLevel { Phrase, Sentence, Poem };

std::string_view level_name(MaskLevel level);

/// Segment id of prefix positions (keyword, start or class token).
inline constexpr int kPrefixSegment = -1;

/**
 * Phrase and sentence membership of every sequence position.
 *
 * Prefix positions carry kPrefixSegment and are visible at every level.
 * A separator belongs to the phrase it closes. Phrases 0..2 form sentence 0,
 * phrases 3..4 sentence 1.
 */
class SegmentLayout {
 public:
  SegmentLayout() = default;
  /// `prefix` leading positions followed by the body `tokens`.
  SegmentLayout(std::size_t prefix, std::span<const int> tokens, int sep_id);

  void push_prefix();
  void push(int token, int sep_id);

  std::size_t size() const { return phrase_.size(); }
  int phrase_id(std::size_t t) const { return phrase_[t]; }
  int sentence_id(std::size_t t) const { return sentence_[t]; }
  bool is_prefix(std::size_t t) const { return phrase_[t] == kPrefixSegment; }
  /// Sequence positions of the separators seen so far.
  const std::vector<std::size_t>& boundaries() const { return boundaries_; }
  /// Phrase that the next body token would join.
  int open_phrase() const { return open_; }

 private:
  std::vector<int> phrase_;
  std::vector<int> sentence_;
  std::vector<std::size_t> boundaries_;
  int open_ = 0;
};

inline int sentence_of_phrase(int phrase) {
  return phrase == kPrefixSegment ? kPrefixSegment : (phrase <= 2 ? 0 : 1);
}

/// Visibility rule shared by the dense masks and the incremental decoder.
/// Arguments are the segment ids at the chosen level of query t and key u.
inline bool visible(int seg_t, int seg_u, std::size_t t, std::size_t u, bool causal) {
  if (causal && u > t) return false;
  return seg_t == kPrefixSegment || seg_u == kPrefixSegment || seg_t == seg_u;
}

/// T×T additive mask with entries 0 (visible) or -inf.
struct AttentionMaskMatrix {
  numerics::Tensor entries;
  MaskLevel level = MaskLevel::Poem;
  bool causal = false;

  std::size_t size() const { return entries.rows(); }
  bool allowed(std::size_t t, std::size_t u) const { return entries.at(t, u) == 0.0; }
};

AttentionMaskMatrix build_mask(const SegmentLayout& layout, MaskLevel level, bool causal);

/// Masks for the three attention branches, indexed phrase, sentence, poem.
struct MaskSet {
  AttentionMaskMatrix phrase;
  AttentionMaskMatrix sentence;
  AttentionMaskMatrix poem;

  static MaskSet build(const SegmentLayout& layout, bool causal);
  const AttentionMaskMatrix& operator[](std::size_t branch) const;
};

}  // namespace wakavt::attention
