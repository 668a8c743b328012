// SPDX-License-Identifier: Apache-2.0
#include "wakavt/attention/mask.hpp"

#include <limits>
#include <stdexcept>

namespace wakavt::attention {

std::string_view level_name(MaskLevel level) {
  switch (level) {
    case MaskLevel::Phrase: return "phrase";
    case MaskLevel::Sentence: return "sentence";
    case MaskLevel::Poem: return "poem";
  }
  return "poem";
}

SegmentLayout::SegmentLayout(std::size_t prefix, std::span<const int> tokens, int sep_id) {
  for (std::size_t i = 0; i < prefix; ++i) push_prefix();
  for (int tok : tokens) push(tok, sep_id);
}

void SegmentLayout::push_prefix() {
  phrase_.push_back(kPrefixSegment);
  sentence_.push_back(kPrefixSegment);
}

void SegmentLayout::push(int token, int sep_id) {
  phrase_.push_back(open_);
  sentence_.push_back(sentence_of_phrase(open_));
  if (token == sep_id) {
    boundaries_.push_back(phrase_.size() - 1);
    // Anything after a fifth separator stays in the last phrase.
    if (open_ < 4) ++open_;
  }
}

AttentionMaskMatrix build_mask(const SegmentLayout& layout, MaskLevel level, bool causal) {
  const std::size_t T = layout.size();
  if (T == 0) throw std::invalid_argument("build_mask: empty layout");
  AttentionMaskMatrix m{numerics::Tensor({T, T}, -std::numeric_limits<double>::infinity()), level,
                        causal};
  auto seg = [&](std::size_t t) {
    switch (level) {
      case MaskLevel::Phrase: return layout.phrase_id(t);
      case MaskLevel::Sentence: return layout.sentence_id(t);
      case MaskLevel::Poem: break;
    }
    return 0;
  };
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t u = 0; u < T; ++u)
      if (visible(seg(t), seg(u), t, u, causal)) m.entries.at(t, u) = 0.0;
  return m;
}

MaskSet MaskSet::build(const SegmentLayout& layout, bool causal) {
  return {build_mask(layout, MaskLevel::Phrase, causal),
          build_mask(layout, MaskLevel::Sentence, causal),
          build_mask(layout, MaskLevel::Poem, causal)};
}

const AttentionMaskMatrix& MaskSet::operator[](std::size_t branch) const {
  switch (branch) {
    case 0: return phrase;
    case 1: return sentence;
    case 2: return poem;
  }
  throw std::out_of_range("mask branch index");
}

}  // namespace wakavt::attention
