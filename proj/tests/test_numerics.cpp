// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "grad_check.hpp"
#include "wakavt/numerics/kernels.hpp"
#include "wakavt/numerics/ops.hpp"
#include "wakavt/numerics/parameter_store.hpp"

using namespace wakavt::numerics;
using wakavt::test_support::max_grad_error;
using wakavt::test_support::random_tensor;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Weighted sum with fixed random weights, so no gradient is identically zero.
Var probe(const Var& x, Rng& rng) {
  return sum(mul(x, constant(random_tensor(x.shape(), rng))));
}
}  // namespace

TEST(Linear, IdentityWeights) {
  auto y = linear(constant(Tensor::vector({1, 2})), constant(Tensor::identity(2)),
                  constant(Tensor::vector({0, 0})));
  EXPECT_EQ(y.value(), Tensor::vector({1, 2}));
}

TEST(Linear, DirectEvaluation) {
  auto y = linear(constant(Tensor::vector({1, 0})), constant(Tensor::matrix({{2, 3}, {5, 7}})),
                  constant(Tensor::vector({1, 1})));
  EXPECT_EQ(y.value(), Tensor::vector({3, 4}));
}

TEST(Linear, BatchesOverLeadingAxes) {
  Tensor x({2, 3, 2}, 1.0);
  auto y = linear(constant(x), constant(Tensor({2, 4}, 0.5)), constant(Tensor({4}, 0.25)));
  EXPECT_EQ(y.shape(), (Shape{2, 3, 4}));
  for (double v : y.value().values()) EXPECT_DOUBLE_EQ(v, 1.25);
}

TEST(Linear, RejectsMismatchedWidth) {
  EXPECT_THROW(linear(constant(Tensor({3, 2})), constant(Tensor({4, 5})), constant(Tensor({5}))),
               ShapeError);
}

TEST(Softmax, Symmetric) {
  auto y = softmax(constant(Tensor::vector({0, 0})), 0);
  EXPECT_DOUBLE_EQ(y.value()[0], 0.5);
  EXPECT_DOUBLE_EQ(y.value()[1], 0.5);
}

TEST(Softmax, MatchesDirectExpNormalise) {
  auto y = softmax(constant(Tensor::vector({1, 2, 3})), 0);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(y.value()[0], std::exp(1.0) / z, 1e-15);
  EXPECT_NEAR(y.value()[0], 0.09003, 1e-5);
  EXPECT_NEAR(y.value()[1], 0.24473, 1e-5);
  EXPECT_NEAR(y.value()[2], 0.66524, 1e-5);
}

TEST(Softmax, MaskedEntryIsExactlyZero) {
  auto y = softmax(constant(Tensor::vector({5, -kInf})), 0);
  EXPECT_EQ(y.value()[0], 1.0);
  EXPECT_EQ(y.value()[1], 0.0);
}

TEST(Softmax, FullyMaskedRowIsAnError) {
  Tensor x = Tensor::matrix({{0, 1}, {-kInf, -kInf}});
  EXPECT_THROW(softmax(constant(x), 1), kernels::FullyMaskedError);
}

TEST(Softmax, NonLastAxis) {
  Tensor x = Tensor::matrix({{1, 5}, {3, 5}});
  auto y = softmax(constant(x), 0);
  EXPECT_NEAR(y.value().at(0, 0), 1.0 / (1.0 + std::exp(2.0)), 1e-15);
  EXPECT_DOUBLE_EQ(y.value().at(0, 1), 0.5);
}

TEST(Softmax, RowsSumToOneProperty) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.uniform_int(5), n = 1 + rng.uniform_int(9);
    const std::size_t axis = rng.uniform_int(2);
    auto y = softmax(constant(random_tensor({m, n}, rng, 10.0)), axis);
    const std::size_t outer = axis == 0 ? n : m, len = axis == 0 ? m : n;
    for (std::size_t o = 0; o < outer; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        const double v = axis == 0 ? y.value().at(i, o) : y.value().at(o, i);
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(LayerNorm, TwoElementVector) {
  auto y = layer_norm(constant(Tensor::vector({1, 3})), constant(Tensor::vector({1, 1})),
                      constant(Tensor::vector({0, 0})), 1e-5);
  EXPECT_NEAR(y.value()[0], -1.0, 1e-5);
  EXPECT_NEAR(y.value()[1], 1.0, 1e-5);
}

TEST(LayerNorm, ConstantInputCollapsesToBeta) {
  auto y = layer_norm(constant(Tensor({4}, 2.5)), constant(Tensor({4}, 1.0)),
                      constant(Tensor::vector({0.1, 0.2, 0.3, 0.4})), 1e-5);
  EXPECT_EQ(y.value(), Tensor::vector({0.1, 0.2, 0.3, 0.4}));
}

TEST(LayerNorm, ZeroGainGivesBeta) {
  Rng rng(3);
  auto beta = Tensor::vector({1, -2, 3});
  auto y = layer_norm(constant(random_tensor({2, 3}, rng)), constant(Tensor({3}, 0.0)),
                      constant(beta), 1e-5);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(y.value().at(r, j), beta[j]);
}

TEST(LayerNorm, StandardisesEachRowProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + rng.uniform_int(30);
    Tensor x = random_tensor({3, d}, rng, 3.0);
    auto y = layer_norm(constant(x), constant(Tensor({d}, 1.0)), constant(Tensor({d}, 0.0)), 1e-12);
    for (std::size_t r = 0; r < 3; ++r) {
      double mean = 0.0, var = 0.0;
      for (double v : y.value().row(r)) mean += v;
      mean /= static_cast<double>(d);
      for (double v : y.value().row(r)) var += (v - mean) * (v - mean);
      var /= static_cast<double>(d);
      EXPECT_LT(std::abs(mean), 1e-10);
      EXPECT_NEAR(var, 1.0, 1e-6);
    }
  }
}

TEST(Dropout, InferenceIsIdentity) {
  Rng rng(1);
  Var x = constant(Tensor::vector({1, 2, 3}));
  EXPECT_EQ(dropout(x, 0.5, Mode::Infer, &rng).value(), x.value());
}

TEST(Dropout, ZeroRateIsIdentity) {
  Rng rng(1);
  Var x = constant(Tensor::vector({1, 2, 3}));
  EXPECT_EQ(dropout(x, 0.0, Mode::Train, &rng).value(), x.value());
}

TEST(Dropout, InvertedScalingWithFixedMask) {
  const bool keep[] = {true, false};
  auto y = dropout_with_mask(constant(Tensor::vector({4, 6})), 0.5, keep);
  EXPECT_EQ(y.value(), Tensor::vector({8, 0}));
}

TEST(Dropout, KeepsExpectedFraction) {
  Rng rng(5);
  auto y = dropout(constant(Tensor({10000}, 1.0)), 0.3, Mode::Train, &rng);
  double kept = 0.0;
  for (double v : y.value().values()) {
    if (v != 0.0) {
      EXPECT_DOUBLE_EQ(v, 1.0 / 0.7);
      kept += 1.0;
    }
  }
  EXPECT_NEAR(kept / 10000.0, 0.7, 0.02);
}

TEST(Backward, SumGivesOnes) {
  ParameterStore store;
  Var w = store.add("w", Tensor({2, 3}, 0.7), Partition::Theta);
  backward(sum(w), store);
  for (double g : store.grad("w").values()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, SoftmaxSumIsConserved) {
  ParameterStore store;
  Var x = store.add("x", Tensor::matrix({{0.3, -1.2, 2.0}}), Partition::Theta);
  backward(sum(softmax(x, 1)), store);
  for (double g : store.grad("x").values()) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(Backward, UnreachableParameterGetsExactZero) {
  ParameterStore store;
  Var a = store.add("a", Tensor({3}, 1.0), Partition::Theta);
  store.add("b", Tensor({3}, 1.0), Partition::Xi);
  // Dirty the slot first; backward must reset it.
  store.get("b").node()->grad.fill(42.0);
  backward(sum(square(a)), store);
  for (double g : store.grad("b").values()) EXPECT_EQ(g, 0.0);
  for (double g : store.grad("a").values()) EXPECT_EQ(g, 2.0);
}

TEST(Backward, RejectsNonScalarLoss) {
  ParameterStore store;
  Var a = store.add("a", Tensor({3}, 1.0), Partition::Theta);
  EXPECT_THROW(backward(square(a), store), ShapeError);
}

TEST(Backward, TwoLayerNetMatchesFiniteDifferences) {
  Rng rng(2024);
  ParameterStore store;
  Var w1 = store.add("w1", random_tensor({4, 6}, rng, 0.5), Partition::Theta);
  Var b1 = store.add("b1", random_tensor({6}, rng, 0.1), Partition::Theta);
  Var w2 = store.add("w2", random_tensor({6, 3}, rng, 0.5), Partition::Theta);
  Var b2 = store.add("b2", random_tensor({3}, rng, 0.1), Partition::Theta);
  Var x = constant(random_tensor({5, 4}, rng));
  const std::vector<std::pair<std::size_t, std::size_t>> targets{{0, 1}, {1, 0}, {2, 2}, {3, 1}, {4, 0}};
  auto loss = [&] {
    Var h = tanh(linear(x, w1, b1));
    return scale(sum(pick(log_softmax(linear(h, w2, b2)), targets)), -1.0);
  };
  EXPECT_LT(max_grad_error({w1, b1, w2, b2}, loss, rng), 1e-5);
}

TEST(FiniteDiff, QuadraticDerivative) {
  auto g = finite_diff_grad([](const Tensor& x) { return x[0] * x[0]; }, Tensor::vector({3}), 1e-5);
  EXPECT_NEAR(g[0], 6.0, 1e-8);
}

TEST(FiniteDiff, ConstantFunctionHasZeroGradient) {
  auto g = finite_diff_grad([](const Tensor&) { return 4.2; }, Tensor::vector({1, 2, 3}));
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDiff, SoftmaxCrossEntropyAgreesWithBackward) {
  const Tensor logits = Tensor::matrix({{0.5, -1.0, 2.0, 0.1}});
  const std::pair<std::size_t, std::size_t> target{0, 2};
  auto ce = [&](const Tensor& x) {
    NoGradGuard guard;
    return -pick(log_softmax(constant(x)), std::span(&target, 1)).value().item();
  };
  auto numeric = finite_diff_grad(ce, logits);
  Var leaf_logits = leaf(logits);
  backward(scale(pick(log_softmax(leaf_logits), std::span(&target, 1)), -1.0));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(leaf_logits.node()->grad[i], numeric[i], 1e-6);
  }
}

// Every differentiable op against central differences over 100 seeds.
TEST(GradientProperty, EveryOpMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const std::size_t m = 2 + rng.uniform_int(3), n = 2 + rng.uniform_int(4);
    Var a = leaf(random_tensor({m, n}, rng));
    Var b = leaf(random_tensor({m, n}, rng));
    Var w = leaf(random_tensor({n, 3}, rng));
    Var bias = leaf(random_tensor({3}, rng));
    Var row = leaf(random_tensor({n}, rng));
    Var gamma = leaf(random_tensor({n}, rng));
    Var beta = leaf(random_tensor({n}, rng));
    const Tensor mask = [&] {
      Tensor t({m, n}, 0.0);
      t.at(0, 0) = -kInf;
      return t;
    }();
    std::vector<std::pair<std::size_t, std::size_t>> coords{{0, 1}, {m - 1, 0}, {0, 1}};
    std::vector<int> ids{1, 0, 1};
    const bool keep[] = {true, false, true, true, false, true, true, true, false, true,
                         true, true, false, true, true, true, true, false, true, true};
    Rng wr(seed + 1000);
    const Tensor wa = random_tensor({m, n}, wr), w3 = random_tensor({m, 3}, wr),
                 wt = random_tensor({n, m}, wr), wl = random_tensor({m, n}, wr),
                 wp = random_tensor({3}, wr), we = random_tensor({3, n}, wr),
                 wc = random_tensor({m, 2 * n}, wr), wr2 = random_tensor({2 * m, n}, wr),
                 ws = random_tensor({m, 2}, wr);
    auto dot = [](const Var& x, const Tensor& t) { return sum(mul(x, constant(t))); };
    struct Case {
      const char* name;
      std::vector<Var> leaves;
      std::function<Var()> loss;
    };
    std::vector<Case> cases{
        {"matmul", {a, w}, [&] { return dot(matmul(a, w), w3); }},
        {"linear", {a, w, bias}, [&] { return dot(linear(a, w, bias), w3); }},
        {"transpose", {a}, [&] { return dot(transpose(a), wt); }},
        {"add", {a, b}, [&] { return dot(add(a, b), wa); }},
        {"sub", {a, b}, [&] { return dot(sub(a, b), wa); }},
        {"mul", {a, b}, [&] { return dot(mul(a, b), wa); }},
        {"scale", {a}, [&] { return dot(add_scalar(scale(a, -1.7), 0.3), wa); }},
        {"add_row", {a, row}, [&] { return dot(add_row(a, row), wa); }},
        {"tanh", {a}, [&] { return dot(tanh(a), wa); }},
        {"sigmoid", {a}, [&] { return dot(sigmoid(a), wa); }},
        {"relu", {a}, [&] { return dot(relu(a), wa); }},
        {"exp", {a}, [&] { return dot(exp(a), wa); }},
        {"square", {a}, [&] { return dot(square(a), wa); }},
        {"softmax0", {a}, [&] { return dot(softmax(a, 0), wa); }},
        {"softmax1", {a}, [&] { return dot(softmax(add_constant(a, mask), 1), wa); }},
        {"log_softmax", {a}, [&] { return dot(log_softmax(a), wa); }},
        {"layer_norm", {a, gamma, beta}, [&] { return dot(layer_norm(a, gamma, beta), wl); }},
        {"dropout", {a}, [&] { return dot(dropout_with_mask(a, 0.25, std::span(keep, m * n)), wa); }},
        {"slice_rows", {a}, [&] { return dot(slice_rows(a, 1, m), slice_rows(constant(wa), 1, m).value()); }},
        {"slice_cols", {a}, [&] { return dot(slice_cols(a, 0, 2), ws); }},
        {"concat_cols", {a, b}, [&] { return dot(concat_cols({a, b}), wc); }},
        {"concat_rows", {a, b}, [&] { return dot(concat_rows({a, b}), wr2); }},
        {"embedding", {a}, [&] { return dot(embedding(a, ids), we); }},
        {"pick", {a}, [&] { return dot(pick(a, coords), wp); }},
        {"mean", {a}, [&] { return mean(square(a)); }},
    };
    for (auto& c : cases) {
      EXPECT_LT(max_grad_error(c.leaves, c.loss, rng), 1e-4) << c.name << " seed " << seed;
    }
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(99);
  ParameterStore store;
  store.add("enc.w", random_tensor({3, 4}, rng), Partition::PhiR);
  store.add("prior.b", random_tensor({4}, rng), Partition::PhiP);
  store.value("prior.b")[0] = -0.0;
  store.value("prior.b")[1] = 5e-324;
  Checkpoint ckpt;
  ckpt.meta["config"] = R"({"d_model":4})";
  export_parameters(store, ckpt);
  const auto path = (std::filesystem::temp_directory_path() / "wakavt_ckpt_test.bin").string();
  save_checkpoint(path, ckpt);
  Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.meta.at("config"), R"({"d_model":4})");
  ASSERT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[0].label, "phi_r");
  EXPECT_EQ(back.records[1].label, "phi_p");

  ParameterStore other;
  other.add("enc.w", Tensor({3, 4}), Partition::PhiR);
  other.add("prior.b", Tensor({4}), Partition::PhiP);
  import_parameters(back, other);
  EXPECT_EQ(other.get("enc.w").value(), store.get("enc.w").value());
  EXPECT_EQ(other.get("prior.b").value(), store.get("prior.b").value());
  EXPECT_TRUE(std::signbit(other.value("prior.b")[0]));
  std::filesystem::remove(path);
}

TEST(ParameterStoreTest, RejectsDuplicatePaths) {
  ParameterStore store;
  store.add("x", Tensor({1}), Partition::Theta);
  EXPECT_THROW(store.add("x", Tensor({1}), Partition::Theta), std::invalid_argument);
}
