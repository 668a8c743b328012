// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <set>

#include "metric_oracles.hpp"
#include "model_fixtures.hpp"
#include "wakavt/metrics/metrics.hpp"
#include "wakavt/models/training.hpp"
#include "wakavt/numerics/random.hpp"

namespace {

using namespace wakavt;
using namespace wakavt::metrics;
using corpus::Vocabulary;
using numerics::Rng;

using namespace test_support;

TEST(Dice, Examples) {
  const Poem a{{6, 7, S, 6}, 6}, b{{7, S, 8}, 7}, c{{9, 10}, 9};
  EXPECT_DOUBLE_EQ(dice(a, a), 1.0);
  EXPECT_DOUBLE_EQ(dice(a, c), 0.0);
  EXPECT_DOUBLE_EQ(dice(a, b), 0.5);
  EXPECT_DOUBLE_EQ(dice(Poem{{S}, 6}, Poem{{}, 6}), 1.0);
  // Multiset: {6,6,7} vs {6,7,7,8}: overlap 2 of 3+4.
  const Poem m1{{6, 6, 7}, 6}, m2{{6, 7, 7, 8}, 6};
  EXPECT_DOUBLE_EQ(dice(m1, m2, DiceMode::Multiset), 4.0 / 7.0);
  EXPECT_DOUBLE_EQ(dice(m1, m2, DiceMode::Set), 2.0 * 2 / 5);
}

TEST(Dice, SymmetricAndBounded) {
  auto v = toy_vocab();
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const auto a = random_poem(v, rng, 8), b = random_poem(v, rng, 8);
    for (auto mode : {DiceMode::Set, DiceMode::Multiset}) {
      EXPECT_EQ(dice(a, b, mode), dice(b, a, mode));
      EXPECT_GE(dice(a, b, mode), 0.0);
      EXPECT_LE(dice(a, b, mode), 1.0);
    }
    EXPECT_EQ(dice(a, b), oracle_dice(a, b));
  }
}

TEST(Novelty, MatchesBruteForceOnSmallInstances) {
  auto v = toy_vocab();
  Rng rng(5);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t ns = 1 + rng.uniform_int(6), nc = 1 + rng.uniform_int(6);
    const std::size_t words = 3 + rng.uniform_int(6);
    std::vector<Poem> s, c;
    for (std::size_t i = 0; i < ns; ++i) s.push_back(random_poem(v, rng, words));
    for (std::size_t i = 0; i < nc; ++i) c.push_back(random_poem(v, rng, words));
    EXPECT_EQ(novelty_word(s, c), oracle_novelty(s, c));
    if (ns >= 2) EXPECT_EQ(diversity_word(s), oracle_diversity(s));

    for (int n : {5, 7}) {
      const auto ps = extract_phrases(s, n, v.morae_table());
      const auto pc = extract_phrases(c, n, v.morae_table());
      const auto os = oracle_phrases(s, n, v), oc = oracle_phrases(c, n, v);
      std::set<std::vector<int>> ds(os.begin(), os.end()), dc(oc.begin(), oc.end());
      std::size_t fresh = 0;
      for (const auto& p : ds) fresh += !dc.count(p);
      EXPECT_EQ(novelty_phrase(ps, pc), static_cast<double>(fresh) / ds.size());
      EXPECT_EQ(diversity_phrase(ps), static_cast<double>(ds.size()) / os.size());
      EXPECT_EQ(ps.occurrences(), os.size());
    }
  }
}

TEST(Novelty, DegenerateIdentities) {
  auto v = toy_vocab();
  Rng rng(7);
  std::vector<Poem> c;
  for (int i = 0; i < 6; ++i) c.push_back(random_poem(v, rng, 8));
  const std::vector<Poem> s{c[4], c[1], c[1]};
  EXPECT_EQ(novelty_word(s, c), 0.0);
  const auto t = v.morae_table();
  EXPECT_EQ(novelty_phrase(extract_phrases(s, 5, t), extract_phrases(c, 5, t)), 0.0);
  EXPECT_EQ(novelty_phrase(extract_phrases(s, 7, t), extract_phrases(c, 7, t)), 0.0);

  // No shared words at all.
  Vocabulary w = toy_vocab();
  const int x5 = w.add("x", 5), x7 = w.add("y", 7);
  const Poem fresh{{x5, S, x7, S, x5, S, x7, S, x7}, x5};
  EXPECT_EQ(novelty_word(std::vector<Poem>{fresh}, c), 1.0);
  EXPECT_EQ(novelty_phrase(extract_phrases(std::vector<Poem>{fresh}, 5, w.morae_table()),
                           extract_phrases(c, 5, w.morae_table())),
            1.0);
}

TEST(Diversity, DegenerateIdentities) {
  auto v = toy_vocab();
  Rng rng(9);
  const Poem p = random_poem(v, rng, 8);
  const auto t = v.morae_table();
  for (std::size_t k : {2u, 3u, 5u}) {
    std::vector<Poem> same(k, p);
    EXPECT_EQ(diversity_word(same), 0.0);
    // The single five-morae phrase occurs twice per poem, 2k times in all.
    Vocabulary w;
    w.add("a", 1), w.add("b", 2), w.add("c", 3), w.add("d", 5);
    const Poem only5{{9, S, 9, 7, S, 9, S, 9, 7, S, 8, 6, 7, 6}, 9};
    std::vector<Poem> rep(k, only5);
    const auto ph = extract_phrases(rep, 5, w.morae_table());
    EXPECT_EQ(ph.skipped, 0u);
    EXPECT_EQ(ph.distinct(), 1u);
    EXPECT_EQ(diversity_phrase(ph), 1.0 / static_cast<double>(2 * k));
  }
  // Word-disjoint poems.
  Vocabulary w = toy_vocab();
  std::vector<Poem> disjoint;
  for (int i = 0; i < 3; ++i) {
    const int a = w.add("p" + std::to_string(i), 5), b = w.add("q" + std::to_string(i), 7);
    disjoint.push_back({{a, S, b, S, a, S, b, S, b}, a});
  }
  EXPECT_EQ(diversity_word(disjoint), 1.0);
  const auto d5 = extract_phrases(disjoint, 5, w.morae_table());
  EXPECT_EQ(d5.occurrences(), 6u);
  EXPECT_EQ(diversity_phrase(extract_phrases(std::vector<Poem>{disjoint[0]}, 7, w.morae_table())),
            1.0 / 3.0);
  EXPECT_THROW(diversity_word(std::vector<Poem>{p}), std::invalid_argument);
}

TEST(Phrases, StructureAndSkipping) {
  auto v = toy_vocab();
  Rng rng(2);
  const Poem p = random_poem(v, rng, 8);
  const auto t = v.morae_table();
  EXPECT_EQ(extract_phrases(std::vector<Poem>{p}, 5, t).occurrences(), 2u);
  EXPECT_EQ(extract_phrases(std::vector<Poem>{p}, 7, t).occurrences(), 3u);
  const Poem bad{{6, S, 7}, 6};
  const auto ph = extract_phrases(std::vector<Poem>{p, bad, p}, 5, t);
  EXPECT_EQ(ph.skipped, 1u);
  EXPECT_EQ(ph.occurrences(), 4u);
  for (const auto& [phrase, count] : ph.counts) {
    int m = 0;
    for (int w : phrase) m += v.morae(w);
    EXPECT_EQ(m, 5);
  }
  EXPECT_THROW(extract_phrases(std::vector<Poem>{p}, 6, t), std::invalid_argument);
  EXPECT_THROW(novelty_phrase(extract_phrases(std::vector<Poem>{bad}, 5, t), ph),
               std::invalid_argument);
}

TEST(Diversity, DuplicatingUniquePhrasesHalvesScore) {
  auto v = toy_vocab();
  Rng rng(4);
  const auto t = v.morae_table();
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Poem> s;
    for (int i = 0; i < 4; ++i) s.push_back(random_poem(v, rng, 8));
    const auto ph = extract_phrases(s, 7, t);
    if (ph.distinct() != ph.occurrences()) continue;
    std::vector<Poem> doubled = s;
    doubled.insert(doubled.end(), s.begin(), s.end());
    EXPECT_EQ(diversity_phrase(extract_phrases(doubled, 7, t)), 0.5);
  }
}

TEST(Index, LargeCorpusQueriesStayFast) {
  auto data = test_support::synthetic_data(20000, 400, 11);
  const std::vector<Poem> s(data.poems.begin(), data.poems.begin() + 100);
  const auto start = std::chrono::steady_clock::now();
  const DiceIndex index(data.poems);
  EXPECT_EQ(novelty_word(s, index), 0.0);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 20.0);
}

TEST(Evaluate, ReportShapeAndRanges) {
  auto data = test_support::synthetic_data(60, 30, 6);
  const std::vector<Poem> gen(data.poems.begin(), data.poems.begin() + 10);
  auto r = evaluate_generations(gen, data.poems, data.vocab.morae_table());
  auto j = to_json(r);
  for (const char* k : {"nov_w", "nov_s5", "nov_s7", "div_w", "div_s5", "div_s7"}) {
    EXPECT_GE(j[k].get<double>(), 0.0);
    EXPECT_LE(j[k].get<double>(), 1.0);
  }
  EXPECT_TRUE(j["ppl"].is_null());
  EXPECT_EQ(j["skipped"], 0);
  EXPECT_EQ(r.nov_w, 0.0);
}

TEST(PplKld, UniformAndTrainedModels) {
  auto data = test_support::hand_data();
  auto c = test_support::tiny_config(models::ModelKind::Tlm, attention::AttentionKind::Standard);
  models::Model m(c, data.vocab.size(), 1);
  m.params().out_w.node()->value.fill(0.0);
  const auto u = eval_ppl_kld(m, data.poems, 1);
  EXPECT_NEAR(u.ppl, static_cast<double>(data.vocab.size()), 1e-9);
  EXPECT_FALSE(u.kld);

  auto wc = test_support::tiny_config(models::ModelKind::WakaVT, attention::AttentionKind::Standard);
  wc.learning_rate = 1e-2;
  wc.d_model = 16;
  models::Model w(wc, data.vocab.size(), 1);
  models::TrainState st;
  for (int i = 0; i < 300; ++i) models::train_step(w, st, data.poems, 1);
  const auto r = eval_ppl_kld(w, data.poems, 3);
  EXPECT_GE(r.ppl, 1.0);
  EXPECT_LT(r.ppl, 1.2);
  ASSERT_TRUE(r.kld);
  EXPECT_GE(*r.kld, 0.0);
}

}  // namespace
