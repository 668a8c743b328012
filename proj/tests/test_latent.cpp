// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "grad_check.hpp"
#include "wakavt/latent/gaussian.hpp"

namespace {

using namespace wakavt;
using namespace wakavt::latent;
using numerics::Rng;
using test_support::random_tensor;

DiagGaussian gauss(std::vector<double> mu, std::vector<double> logvar) {
  const std::size_t d = mu.size();
  return {Tensor({d}, std::move(mu)), Tensor({d}, std::move(logvar))};
}

TEST(Project, ZeroMlpGivesStandardNormal) {
  Rng rng(1);
  numerics::ParameterStore store;
  auto p = make_mlp(store, "m", 4, 4, 6, numerics::Partition::PhiP, rng);
  for (const auto& e : store.entries()) e.var.node()->value.fill(0.0);
  auto g = project_gaussian(numerics::constant(random_tensor({3, 4}, rng)), p);
  ASSERT_EQ(g.mu.shape(), (numerics::Shape{3, 3}));
  for (double v : g.mu.value().values()) EXPECT_EQ(v, 0.0);
  for (double v : g.logvar.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Project, MatchesHandEvaluatedMlp) {
  Rng rng(2);
  numerics::ParameterStore store;
  auto p = make_mlp(store, "m", 3, 5, 4, numerics::Partition::PhiR, rng);
  p.b1.node()->value = random_tensor({5}, rng);
  p.b2.node()->value = random_tensor({4}, rng);
  Tensor o = random_tensor({2, 3}, rng);
  auto g = project_gaussian(numerics::constant(o), p);
  for (std::size_t t = 0; t < 2; ++t) {
    std::vector<double> h(5);
    for (std::size_t j = 0; j < 5; ++j) {
      double a = p.b1.value()[j];
      for (std::size_t i = 0; i < 3; ++i) a += o.at(t, i) * p.w1.value().at(i, j);
      h[j] = std::tanh(a);
    }
    for (std::size_t k = 0; k < 4; ++k) {
      double a = p.b2.value()[k];
      for (std::size_t j = 0; j < 5; ++j) a += h[j] * p.w2.value().at(j, k);
      const double got = k < 2 ? g.mu.value().at(t, k) : g.logvar.value().at(t, k - 2);
      EXPECT_NEAR(got, a, 1e-12);
    }
  }
}

TEST(Project, OddWidthRejected) {
  Rng rng(3);
  numerics::ParameterStore store;
  auto p = make_mlp(store, "m", 3, 3, 5, numerics::Partition::PhiR, rng);
  EXPECT_THROW(project_gaussian(numerics::constant(Tensor({1, 3}, 0.0)), p),
               std::invalid_argument);
}

TEST(Reparameterize, Examples) {
  auto d = gauss({1.0}, {std::log(4.0)});
  EXPECT_DOUBLE_EQ(reparameterize(d, Tensor::vector({0.5}))[0], 2.0);
  EXPECT_EQ(reparameterize(d, Tensor::vector({0.0}))[0], 1.0);
  auto s = gauss({0.0, 0.0}, {0.0, 0.0});
  Tensor n = Tensor::vector({0.3, -1.7});
  EXPECT_EQ(reparameterize(s, n), n);
}

TEST(Reparameterize, AffineInNoise) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto d = gauss({rng.normal(), rng.normal(), rng.normal()},
                   {rng.normal(), rng.normal(), rng.normal()});
    Tensor n = random_tensor({3}, rng);
    const double a = rng.uniform(-3, 3);
    Tensor an = n;
    for (auto& v : an.values()) v *= a;
    auto z1 = reparameterize(d, n);
    auto z2 = reparameterize(d, an);
    for (std::size_t i = 0; i < 3; ++i)
      EXPECT_NEAR(z2[i] - d.mu[i], a * (z1[i] - d.mu[i]), 1e-12);
  }
}

TEST(Reparameterize, RowsAgreeWithVectorForm) {
  Rng rng(5);
  GaussianRows rows{numerics::constant(random_tensor({3, 2}, rng)),
                    numerics::constant(random_tensor({3, 2}, rng))};
  Tensor noise = random_tensor({3, 2}, rng);
  Var z = reparameterize(rows, noise);
  for (std::size_t t = 0; t < 3; ++t) {
    Tensor nt = Tensor::vector({noise.at(t, 0), noise.at(t, 1)});
    auto zt = reparameterize(rows.at(t), nt);
    EXPECT_EQ(z.value().at(t, 0), zt[0]);
    EXPECT_EQ(z.value().at(t, 1), zt[1]);
  }
}

TEST(Kl, Examples) {
  auto p = gauss({0.0}, {0.0});
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  EXPECT_DOUBLE_EQ(kl_divergence(gauss({1.0}, {0.0}), p), 0.5);
  EXPECT_NEAR(kl_divergence(gauss({0.0}, {1.0}), p), 0.5 * (std::exp(1.0) - 2.0), 1e-15);
  EXPECT_NEAR(0.5 * (std::exp(1.0) - 2.0), 0.35914, 1e-5);
  EXPECT_THROW(kl_divergence(gauss({0.0, 1.0}, {0.0, 0.0}), p), numerics::ShapeError);
}

TEST(Kl, NonNegativeAndZeroOnlyWhenEqual) {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    auto q = gauss({rng.normal(), rng.normal()}, {rng.normal(), rng.normal()});
    auto p = gauss({rng.normal(), rng.normal()}, {rng.normal(), rng.normal()});
    EXPECT_GT(kl_divergence(q, p), 1e-12);
    EXPECT_LT(std::abs(kl_divergence(q, q)), 1e-12);
  }
}

TEST(Kl, MonteCarloAgreesWithClosedForm) {
  Rng rng(7);
  auto q = gauss({0.4, -0.3}, {-0.5, 0.7});
  auto p = gauss({-0.2, 0.1}, {0.3, -0.2});
  auto log_density = [](const DiagGaussian& g, const Tensor& x) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double var = std::exp(g.logvar[i]);
      const double d = x[i] - g.mu[i];
      s += -0.5 * (std::log(2 * M_PI) + g.logvar[i] + d * d / var);
    }
    return s;
  };
  const int n = 100000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    Tensor noise = random_tensor({2}, rng);
    Tensor z = reparameterize(q, noise);
    const double r = log_density(q, z) - log_density(p, z);
    sum += r;
    sum_sq += r * r;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - kl_divergence(q, p)), 3 * se);
}

TEST(Kl, RowsMatchScalarFormAndGradients) {
  Rng rng(8);
  GaussianRows q{numerics::leaf(random_tensor({3, 2}, rng)), numerics::leaf(random_tensor({3, 2}, rng))};
  GaussianRows p{numerics::leaf(random_tensor({3, 2}, rng)), numerics::leaf(random_tensor({3, 2}, rng))};
  double expected = 0;
  for (std::size_t t = 0; t < 3; ++t) expected += kl_divergence(q.at(t), p.at(t));
  EXPECT_NEAR(kl_divergence(q, p).value().item(), expected, 1e-12);
  auto loss = [&] { return kl_divergence(q, p); };
  EXPECT_LT(test_support::max_grad_error({q.mu, q.logvar, p.mu, p.logvar}, loss, rng), 1e-6);
}

struct FusionFixture {
  numerics::ParameterStore store;
  Rng rng{9};
  FusionParams p = make_fusion(store, "fuse", 3, 4, numerics::Partition::Theta, rng);
};

TEST(Fusion, ZeroGainSeversLatentPath) {
  FusionFixture f;
  f.p.v.node()->value.fill(0.0);
  Var o = numerics::constant(random_tensor({2, 4}, f.rng));
  Var z = numerics::constant(random_tensor({2, 3}, f.rng));
  Var expected = attention::apply_layer_norm(o, f.p.norm);
  EXPECT_EQ(fuse_latent(z, o, f.p).value(), expected.value());
}

TEST(Fusion, InferenceIsDeterministic) {
  FusionFixture f;
  Var o = numerics::constant(random_tensor({2, 4}, f.rng));
  Var z = numerics::constant(random_tensor({2, 3}, f.rng));
  attention::DropoutSpec drop{0.5, numerics::Mode::Infer, &f.rng};
  EXPECT_EQ(fuse_latent(z, o, f.p, drop).value(), fuse_latent(z, o, f.p, drop).value());
}

TEST(Fusion, MatchesDirectFormula) {
  FusionFixture f;
  f.p.norm.gamma.node()->value = random_tensor({4}, f.rng);
  f.p.norm.beta.node()->value = random_tensor({4}, f.rng);
  Tensor o = random_tensor({2, 4}, f.rng);
  Tensor z = random_tensor({2, 3}, f.rng);
  auto got = fuse_latent(numerics::constant(z), numerics::constant(o), f.p).value();
  const auto &W = f.p.w.value(), &U = f.p.u.value(), &V = f.p.v.value();
  for (std::size_t t = 0; t < 2; ++t) {
    std::vector<double> a(4), r(4);
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < 3; ++i) s += z.at(t, i) * W.at(i, j);
      for (std::size_t i = 0; i < 4; ++i) s += o.at(t, i) * U.at(i, j);
      a[j] = std::tanh(s);
    }
    double mean = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      double m = 0;
      for (std::size_t i = 0; i < 4; ++i) m += a[i] * V.at(i, j);
      r[j] = o.at(t, j) + m;
      mean += r[j] / 4;
    }
    double var = 0;
    for (double v : r) var += (v - mean) * (v - mean) / 4;
    for (std::size_t j = 0; j < 4; ++j) {
      const double expected = (r[j] - mean) / std::sqrt(var + 1e-5) * f.p.norm.gamma.value()[j] +
                              f.p.norm.beta.value()[j];
      EXPECT_NEAR(got.at(t, j), expected, 1e-12);
    }
  }
}

TEST(Fusion, NoCrossPositionLeakage) {
  FusionFixture f;
  Var o = numerics::constant(random_tensor({4, 4}, f.rng));
  Tensor z = random_tensor({4, 3}, f.rng);
  auto base = fuse_latent(numerics::constant(z), o, f.p).value();
  for (std::size_t t = 0; t < 4; ++t) {
    Tensor zp = z;
    zp.at(t, 1) += 2.0;
    auto out = fuse_latent(numerics::constant(zp), o, f.p).value();
    for (std::size_t s = 0; s < 4; ++s) {
      bool same = true;
      for (std::size_t j = 0; j < 4; ++j) same = same && out.at(s, j) == base.at(s, j);
      EXPECT_EQ(same, s != t);
    }
  }
}

TEST(Fusion, GradientCheck) {
  FusionFixture f;
  Var o = numerics::leaf(random_tensor({3, 4}, f.rng));
  Var z = numerics::leaf(random_tensor({3, 3}, f.rng));
  Tensor w = random_tensor({3, 4}, f.rng);
  auto loss = [&] {
    return numerics::sum(numerics::mul(fuse_latent(z, o, f.p), numerics::constant(w)));
  };
  std::vector<Var> leaves{o, z};
  for (const auto& e : f.store.entries()) leaves.push_back(e.var);
  EXPECT_LT(test_support::max_grad_error(leaves, loss, f.rng), 1e-4);
}

TEST(Fusion, LengthMismatchThrows) {
  FusionFixture f;
  EXPECT_THROW(fuse_latent(numerics::constant(Tensor({2, 3})), numerics::constant(Tensor({3, 4})), f.p),
               numerics::ShapeError);
}

}  // namespace
