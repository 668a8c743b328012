// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "wakavt/corpus/textrank.hpp"
#include "wakavt/corpus/vocabulary.hpp"

// Corpus file format: one poem per line, tokens separated by single spaces,
// each token written "word:m" with its morae count, phrases separated by a
// bare "|". An optional keyword column precedes the poem: "keyword<TAB>poem".

namespace wakavt::corpus {

class CorpusFormatError : public std::runtime_error {
 public:
  CorpusFormatError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// One parsed corpus line before vocabulary lookup. Separators appear in
/// `words` as "|" with morae 0.
struct CorpusLine {
  std::size_t line = 0;
  std::string keyword;  // empty when the column is absent
  std::vector<std::string> words;
  std::vector<int> morae;
};

std::vector<CorpusLine> parse_corpus(std::istream& in, const std::string& source = "<corpus>");
std::vector<CorpusLine> read_corpus_file(const std::string& path);

/// Vocabulary over every observed word in first-seen order. Words seen fewer
/// than `frequency_floor` times are left out and later encode to UNK.
Vocabulary build_vocab(const std::vector<CorpusLine>& lines, std::size_t frequency_floor = 1);

struct Rejection {
  std::size_t line = 0;
  std::string reason;
};

struct EncodedCorpus {
  std::vector<Poem> poems;
  std::vector<std::size_t> source_lines;  // parallel to poems
  std::vector<Rejection> rejected;
};

/// Encodes every line; poems that break the 5-7-5-7-7 pattern or whose
/// keyword is not in the body are rejected. A missing keyword is extracted
/// with TextRank.
EncodedCorpus encode_corpus(const std::vector<CorpusLine>& lines, const Vocabulary& vocab,
                            const TextRankOptions& textrank = {});

std::vector<int> encode_words(const std::vector<std::string>& words, const Vocabulary& vocab);

/// "word:m word:m | word:m ..." for the body.
std::string format_tokens(const std::vector<int>& tokens, const Vocabulary& vocab);
/// A full corpus line including the keyword column.
std::string format_corpus_line(const Poem& poem, const Vocabulary& vocab);

void write_rejection_report(std::ostream& out, const std::string& source,
                            const std::vector<Rejection>& rejected);

/// Convenience: parse, build the vocabulary and encode in one go.
struct LoadedCorpus {
  Vocabulary vocab;
  EncodedCorpus encoded;
};
LoadedCorpus load_corpus(const std::string& path, std::size_t frequency_floor = 1);

// ---- splitting ------------------------------------------------------------

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle of indices 0..n-1 cut into train/validation/test with the
/// reference proportions 156801 : 10000 : 5000, each partition non-empty.
DatasetSplit split_dataset(std::size_t n, std::uint64_t seed);

/// JSON manifest: the seed plus the three partitions as source line numbers.
std::string split_manifest_json(const DatasetSplit& split,
                                const std::vector<std::size_t>& source_lines);

}  // namespace wakavt::corpus
