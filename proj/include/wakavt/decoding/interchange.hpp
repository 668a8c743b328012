// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "wakavt/corpus/vocabulary.hpp"

namespace wakavt::decoding {

/// "keyword<TAB>w w | w ..." with plain word forms.
std::string format_interchange(const corpus::Poem& poem, const corpus::Vocabulary& vocab);
void write_interchange(std::ostream& out, const std::vector<corpus::Poem>& poems,
                       const corpus::Vocabulary& vocab);

struct InterchangeSet {
  std::vector<corpus::Poem> poems;
  std::size_t unknown_words = 0;  // mapped to the unknown token
};

/// Words missing from `vocab` become the unknown token; a line without a
/// tab has no keyword (-1).
InterchangeSet read_interchange(std::istream& in, const corpus::Vocabulary& vocab,
                                const std::string& source = "<generations>");

}  // namespace wakavt::decoding
