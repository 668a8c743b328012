// SPDX-License-Identifier: Apache-2.0
#include "wakavt/corpus/corpus.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "wakavt/numerics/random.hpp"

namespace wakavt::corpus {

CorpusFormatError::CorpusFormatError(const std::string& source, std::size_t line,
                                     const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

// Splits "word:m"; the last colon separates the count so words may contain ':'.
bool split_token(std::string_view tok, std::string& word, int& morae) {
  const auto colon = tok.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == tok.size()) return false;
  const char* first = tok.data() + colon + 1;
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, morae);
  if (ec != std::errc() || ptr != last) return false;
  word.assign(tok.substr(0, colon));
  return true;
}

}  // namespace

std::vector<CorpusLine> parse_corpus(std::istream& in, const std::string& source) {
  std::vector<CorpusLine> lines;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    CorpusLine cl;
    cl.line = line_no;
    std::string_view body = text;
    if (const auto tab = body.find('\t'); tab != std::string_view::npos) {
      cl.keyword.assign(body.substr(0, tab));
      body.remove_prefix(tab + 1);
      if (cl.keyword.empty()) throw CorpusFormatError(source, line_no, "empty keyword column");
      if (body.find('\t') != std::string_view::npos) {
        throw CorpusFormatError(source, line_no, "more than one tab");
      }
    }
    if (body.empty()) throw CorpusFormatError(source, line_no, "empty poem");
    std::size_t start = 0;
    while (start <= body.size()) {
      auto end = body.find(' ', start);
      if (end == std::string_view::npos) end = body.size();
      std::string_view tok = body.substr(start, end - start);
      if (tok.empty()) {
        throw CorpusFormatError(source, line_no, "tokens must be separated by single spaces");
      }
      if (tok == Vocabulary::kSepText) {
        cl.words.emplace_back(Vocabulary::kSepText);
        cl.morae.push_back(0);
      } else {
        std::string word;
        int morae = 0;
        if (!split_token(tok, word, morae)) {
          throw CorpusFormatError(source, line_no,
                                  "token '" + std::string(tok) + "' lacks a ':m' morae count");
        }
        if (morae < 1) {
          throw CorpusFormatError(source, line_no,
                                  "token '" + std::string(tok) + "' has a non-positive count");
        }
        cl.words.push_back(std::move(word));
        cl.morae.push_back(morae);
      }
      start = end + 1;
    }
    lines.push_back(std::move(cl));
  }
  return lines;
}

std::vector<CorpusLine> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus: " + path);
  return parse_corpus(in, path);
}

Vocabulary build_vocab(const std::vector<CorpusLine>& lines, std::size_t frequency_floor) {
  std::unordered_map<std::string, std::size_t> counts;
  std::unordered_map<std::string, std::pair<int, std::size_t>> first_morae;
  std::vector<std::string> order;
  for (const auto& cl : lines) {
    for (std::size_t i = 0; i < cl.words.size(); ++i) {
      if (cl.words[i] == Vocabulary::kSepText) continue;
      auto [it, inserted] = first_morae.emplace(cl.words[i], std::make_pair(cl.morae[i], cl.line));
      if (inserted) {
        order.push_back(cl.words[i]);
      } else if (it->second.first != cl.morae[i]) {
        throw CorpusFormatError("<corpus>", cl.line,
                                "word '" + cl.words[i] + "' has morae " +
                                    std::to_string(cl.morae[i]) + " but line " +
                                    std::to_string(it->second.second) + " gives " +
                                    std::to_string(it->second.first));
      }
      ++counts[cl.words[i]];
    }
  }
  Vocabulary v;
  for (const auto& w : order) {
    if (counts[w] >= frequency_floor) v.add(w, first_morae[w].first);
  }
  return v;
}

std::vector<int> encode_words(const std::vector<std::string>& words, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words)
    ids.push_back(w == Vocabulary::kSepText ? Vocabulary::kSep : vocab.id_or_unk(w));
  return ids;
}

EncodedCorpus encode_corpus(const std::vector<CorpusLine>& lines, const Vocabulary& vocab,
                            const TextRankOptions& textrank) {
  const auto table = vocab.morae_table();
  EncodedCorpus out;
  for (const auto& cl : lines) {
    Poem p;
    p.tokens = encode_words(cl.words, vocab);
    if (!constraint::validate_pattern(p.tokens, table).valid) {
      std::string why = "does not follow the 5-7-5-7-7 pattern";
      for (int t : p.tokens)
        if (t == Vocabulary::kUnk) why = "contains a word outside the vocabulary";
      out.rejected.push_back({cl.line, why});
      continue;
    }
    if (cl.keyword.empty()) {
      p.keyword = textrank_keyword(p.tokens, table, textrank);
    } else {
      p.keyword = vocab.id_or_unk(cl.keyword);
      bool present = false;
      for (int t : p.tokens) present = present || t == p.keyword;
      if (p.keyword == Vocabulary::kUnk || !present) {
        out.rejected.push_back({cl.line, "keyword '" + cl.keyword + "' does not occur in the poem"});
        continue;
      }
    }
    out.poems.push_back(std::move(p));
    out.source_lines.push_back(cl.line);
  }
  return out;
}

std::string format_tokens(const std::vector<int>& tokens, const Vocabulary& vocab) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    if (tokens[i] == Vocabulary::kSep) {
      s += Vocabulary::kSepText;
    } else {
      s += vocab.word(tokens[i]);
      s += ':';
      s += std::to_string(vocab.morae(tokens[i]));
    }
  }
  return s;
}

std::string format_corpus_line(const Poem& poem, const Vocabulary& vocab) {
  return vocab.word(poem.keyword) + "\t" + format_tokens(poem.tokens, vocab);
}

void write_rejection_report(std::ostream& out, const std::string& source,
                            const std::vector<Rejection>& rejected) {
  for (const auto& r : rejected) out << source << ':' << r.line << ": rejected: " << r.reason << '\n';
}

LoadedCorpus load_corpus(const std::string& path, std::size_t frequency_floor) {
  auto lines = read_corpus_file(path);
  LoadedCorpus c;
  try {
    c.vocab = build_vocab(lines, frequency_floor);
  } catch (const CorpusFormatError& e) {
    // Re-label with the real file name.
    std::string msg = e.what();
    throw CorpusFormatError(path, e.line(), msg.substr(msg.find(": ") + 2));
  }
  c.encoded = encode_corpus(lines, c.vocab);
  return c;
}

// ---- splitting ------------------------------------------------------------

DatasetSplit split_dataset(std::size_t n, std::uint64_t seed) {
  if (n < 3) {
    throw std::invalid_argument("split_dataset: need at least 3 poems, got " + std::to_string(n));
  }
  constexpr double kTotal = 171801.0;
  auto portion = [&](double part) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * part / kTotal)));
  };
  std::size_t n_val = portion(10000.0);
  std::size_t n_test = portion(5000.0);
  while (n_val + n_test >= n) {
    if (n_val > 1) --n_val;
    else --n_test;
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  numerics::Rng rng(seed, 0x5b117);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.uniform_int(i + 1)]);
  DatasetSplit s;
  s.seed = seed;
  s.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val),
                idx.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), idx.end());
  return s;
}

std::string split_manifest_json(const DatasetSplit& split,
                                const std::vector<std::size_t>& source_lines) {
  auto lines_of = [&](const std::vector<std::size_t>& part) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto i : part) arr.push_back(source_lines.at(i));
    return arr;
  };
  nlohmann::json j;
  j["seed"] = split.seed;
  j["train"] = lines_of(split.train);
  j["validation"] = lines_of(split.validation);
  j["test"] = lines_of(split.test);
  return j.dump();
}

}  // namespace wakavt::corpus
