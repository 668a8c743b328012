// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wakavt/corpus/corpus.hpp"
#include "wakavt/corpus/synthetic.hpp"
#include "wakavt/numerics/random.hpp"

namespace {

using namespace wakavt::corpus;
using wakavt::constraint::validate_pattern;

const char* kTwoPoems =
    "かぜ:2 ふく:2 と:1 | あきの:3 よの:2 つき:2 | ひかり:3 さす:2 | かぜの:3 おとに:3 も:1 | "
    "しら:2 つゆ:2 ぞ:1 おく:2\n"
    "はる\tはる:2 くる:2 と:1 | はなの:3 さく:2 やま:2 | はる:2 かぜ:2 と:1 | とりの:3 なく:2 "
    "こゑ:2 | はな:2 ちる:2 さと:2 に:1\n";

std::vector<CorpusLine> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in, "toy");
}

TEST(Vocab, EmptyCorpusHasOnlySpecials) {
  auto v = build_vocab(parse(""));
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.word(Vocabulary::kSep), "|");
  EXPECT_EQ(v.morae(Vocabulary::kUnk), wakavt::constraint::kUnknownMorae);
}

TEST(Vocab, FirstSeenOrderAndCounts) {
  auto lines = parse(kTwoPoems);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[1].keyword, "はる");
  auto v = build_vocab(lines);
  EXPECT_EQ(v.id("かぜ"), 6);
  EXPECT_EQ(v.id("ふく"), 7);
  EXPECT_EQ(v.id("と"), 8);
  // Count oracle: distinct non-separator words across both lines.
  std::set<std::string> distinct;
  for (const auto& l : lines)
    for (const auto& w : l.words)
      if (w != "|") distinct.insert(w);
  EXPECT_EQ(v.size(), 6 + distinct.size());
}

TEST(Vocab, FrequencyFloorDropsRareWords) {
  auto v = build_vocab(parse(kTwoPoems), 2);
  EXPECT_TRUE(v.find("かぜ"));   // appears twice
  EXPECT_FALSE(v.find("ふく"));  // once
  auto enc = encode_corpus(parse(kTwoPoems), v);
  EXPECT_EQ(enc.poems.size(), 0u);
  EXPECT_EQ(enc.rejected.size(), 2u);
}

TEST(Vocab, FileRoundTrip) {
  auto v = build_vocab(parse(kTwoPoems));
  std::stringstream s;
  v.write(s);
  auto w = Vocabulary::read(s);
  ASSERT_EQ(w.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(w.word(static_cast<int>(i)), v.word(static_cast<int>(i)));
    EXPECT_EQ(w.morae(static_cast<int>(i)), v.morae(static_cast<int>(i)));
  }
}

TEST(Parse, ErrorsCarryLineNumbers) {
  try {
    parse("かぜ:2 | x:1\nbad token\n");
    FAIL();
  } catch (const CorpusFormatError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("toy:2"), std::string::npos);
  }
  EXPECT_THROW(parse("かぜ:2  ふく:2\n"), CorpusFormatError);
  EXPECT_THROW(parse("かぜ:0\n"), CorpusFormatError);
  EXPECT_THROW(parse("かぜ:x\n"), CorpusFormatError);
  EXPECT_THROW(build_vocab(parse("かぜ:2\nかぜ:3\n")), CorpusFormatError);
}

TEST(Encode, RoundTripReproducesTokenText) {
  auto lines = parse(kTwoPoems);
  auto v = build_vocab(lines);
  auto enc = encode_corpus(lines, v);
  ASSERT_EQ(enc.poems.size(), 2u);
  std::istringstream in(kTwoPoems);
  std::string line;
  for (const auto& p : enc.poems) {
    std::getline(in, line);
    const auto body = line.substr(line.find('\t') == std::string::npos ? 0 : line.find('\t') + 1);
    EXPECT_EQ(format_tokens(p.tokens, v), body);
  }
  EXPECT_EQ(format_corpus_line(enc.poems[1], v), std::string(kTwoPoems).substr(
                                                    std::string(kTwoPoems).find("はる\t"),
                                                    format_corpus_line(enc.poems[1], v).size()));
}

TEST(Encode, RejectsPatternViolationsWithReport) {
  const std::string text = std::string(kTwoPoems) + "かぜ:2 | ふく:2\n";
  auto lines = parse(text);
  auto v = build_vocab(lines);
  auto enc = encode_corpus(lines, v);
  EXPECT_EQ(enc.poems.size(), 2u);
  ASSERT_EQ(enc.rejected.size(), 1u);
  EXPECT_EQ(enc.rejected[0].line, 3u);
  std::ostringstream report;
  write_rejection_report(report, "toy", enc.rejected);
  EXPECT_EQ(report.str().rfind("toy:3: rejected:", 0), 0u);
  for (const auto& p : enc.poems) EXPECT_TRUE(validate_pattern(p.tokens, v.morae_table()).valid);
}

TEST(Encode, ExtractedKeywordOccursInPoem) {
  auto lines = parse(kTwoPoems);
  auto v = build_vocab(lines);
  auto enc = encode_corpus(lines, v);
  for (const auto& p : enc.poems)
    EXPECT_NE(std::find(p.tokens.begin(), p.tokens.end(), p.keyword), p.tokens.end());
  EXPECT_EQ(v.word(enc.poems[1].keyword), "はる");
}

// ---- TextRank --------------------------------------------------------------

TEST(TextRank, SingleWord) {
  std::vector<int> w{9, 9, 9};
  EXPECT_EQ(textrank(w).best, 9);
}

TEST(TextRank, StarGraphHubMatchesClosedForm) {
  // hub 1 adjacent to each of 2, 3, 4 twice -> uniform star with k = 3.
  std::vector<int> w{1, 2, 1, 3, 1, 4, 1};
  TextRankOptions opt;
  opt.iterations = 500;
  auto r = textrank(w, opt);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.best, 1);
  const double d = 0.85, k = 3;
  const double hub = (1 + d * k) / (1 + d);
  const double leaf = (1 - d) + d * hub / k;
  EXPECT_NEAR(r.scores[0], hub, 1e-7);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_NEAR(r.scores[i], leaf, 1e-7);
}

TEST(TextRank, TiesGoToEarliestWord) {
  std::vector<int> w{5, 6};
  EXPECT_EQ(textrank(w).best, 5);
  std::vector<int> cyc{7, 8, 9, 7};
  EXPECT_EQ(textrank(cyc).best, 7);
}

TEST(TextRank, DefaultsAndConvergenceOnToyGraphs) {
  TextRankOptions def;
  EXPECT_EQ(def.window, 2u);
  EXPECT_DOUBLE_EQ(def.damping, 0.85);
  EXPECT_EQ(def.iterations, 30u);
  wakavt::numerics::Rng rng(12);
  TextRankOptions opt;
  opt.iterations = 500;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> w;
    const std::size_t n = 1 + rng.uniform_int(20);
    for (std::size_t i = 0; i < n; ++i) w.push_back(static_cast<int>(rng.uniform_int(8)));
    auto a = textrank(w, opt);
    auto b = textrank(w, opt);
    EXPECT_TRUE(a.converged);
    EXPECT_LT(a.iterations, opt.iterations);
    EXPECT_EQ(a.scores, b.scores);
    // The default 30-iteration run picks the same keyword.
    EXPECT_EQ(textrank(w).best, a.best);
  }
}

// ---- split -----------------------------------------------------------------

TEST(Split, ReferenceSizes) {
  auto s = split_dataset(171801, 1);
  EXPECT_EQ(s.train.size(), 156801u);
  EXPECT_EQ(s.validation.size(), 10000u);
  EXPECT_EQ(s.test.size(), 5000u);
}

TEST(Split, DisjointExhaustiveDeterministic) {
  for (std::size_t n : {3u, 4u, 10u, 200u, 1001u}) {
    auto a = split_dataset(n, 42);
    auto b = split_dataset(n, 42);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    EXPECT_GE(a.train.size(), 1u);
    EXPECT_GE(a.validation.size(), 1u);
    EXPECT_GE(a.test.size(), 1u);
    std::vector<std::size_t> all;
    for (const auto* part : {&a.train, &a.validation, &a.test})
      all.insert(all.end(), part->begin(), part->end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(all[i], i);
  }
  EXPECT_NE(split_dataset(200, 1).test, split_dataset(200, 2).test);
  EXPECT_THROW(split_dataset(2, 0), std::invalid_argument);
}

TEST(Split, ManifestUsesSourceLines) {
  auto s = split_dataset(3, 7);
  auto j = nlohmann::json::parse(split_manifest_json(s, {10, 20, 30}));
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["train"].size() + j["validation"].size() + j["test"].size(), 3u);
  EXPECT_EQ(j["train"][0].get<std::size_t>() % 10, 0u);
}

// ---- synthetic -------------------------------------------------------------

TEST(Synthetic, TwoHundredValidPoems) {
  auto spec = make_toy_vocab(30, 3);
  EXPECT_EQ(spec.words[0].morae, 1);
  const std::string text = generate_synthetic_corpus(200, spec, 5);
  auto lines = parse(text);
  ASSERT_EQ(lines.size(), 200u);
  auto v = build_vocab(lines);
  auto enc = encode_corpus(lines, v);
  EXPECT_EQ(enc.poems.size(), 200u);
  EXPECT_TRUE(enc.rejected.empty());
  EXPECT_LE(v.size(), 36u);
}

TEST(Synthetic, ByteIdenticalUnderFixedSeed) {
  auto spec = make_toy_vocab(40, 9);
  EXPECT_EQ(generate_synthetic_corpus(50, spec, 1), generate_synthetic_corpus(50, spec, 1));
  EXPECT_NE(generate_synthetic_corpus(50, spec, 1), generate_synthetic_corpus(50, spec, 2));
  auto spec2 = make_toy_vocab(40, 9);
  for (std::size_t i = 0; i < spec.words.size(); ++i) EXPECT_EQ(spec.words[i].text, spec2.words[i].text);
}

TEST(Synthetic, RejectsVocabularyWithoutUnitWord) {
  ToyVocabSpec spec;
  spec.words = {{"かぜ", 2}, {"はな", 2}};
  EXPECT_THROW(generate_synthetic_poems(1, spec, 0), std::invalid_argument);
}

}  // namespace
