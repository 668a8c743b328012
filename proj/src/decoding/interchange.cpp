// SPDX-License-Identifier: Apache-2.0
#include "wakavt/decoding/interchange.hpp"

#include <sstream>
#include <stdexcept>

namespace wakavt::decoding {

std::string format_interchange(const corpus::Poem& poem, const corpus::Vocabulary& vocab) {
  std::string line = poem.keyword >= 0 ? vocab.word(poem.keyword) : std::string();
  line += '\t';
  for (std::size_t i = 0; i < poem.tokens.size(); ++i) {
    if (i) line += ' ';
    line += vocab.word(poem.tokens[i]);
  }
  return line;
}

void write_interchange(std::ostream& out, const std::vector<corpus::Poem>& poems,
                       const corpus::Vocabulary& vocab) {
  for (const auto& p : poems) out << format_interchange(p, vocab) << '\n';
}

InterchangeSet read_interchange(std::istream& in, const corpus::Vocabulary& vocab,
                                const std::string& source) {
  InterchangeSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    corpus::Poem poem;
    std::string body = line;
    if (const auto tab = line.find('\t'); tab != std::string::npos) {
      const std::string kw = line.substr(0, tab);
      if (!kw.empty()) {
        const auto id = vocab.find(kw);
        poem.keyword = id ? *id : corpus::Vocabulary::kUnk;
      }
      body = line.substr(tab + 1);
    }
    std::istringstream words(body);
    std::string w;
    while (words >> w) {
      const auto id = vocab.find(w);
      if (!id) ++set.unknown_words;
      poem.tokens.push_back(id ? *id : corpus::Vocabulary::kUnk);
    }
    if (poem.tokens.empty()) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": empty poem body");
    }
    set.poems.push_back(std::move(poem));
  }
  return set;
}

}  // namespace wakavt::decoding
