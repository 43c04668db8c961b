#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "feedback_lab/lipschitz.hpp"
#include "feedback_lab/models.hpp"

namespace fbl {
namespace {

TEST(PowerGrowth, HandValues) {
  EXPECT_EQ(PowerGrowthFn(1, 2)(0.0), 0.0);
  EXPECT_EQ(PowerGrowthFn(1, 1)(-3.0), -3.0);
  EXPECT_EQ(PowerGrowthFn(2, 3)(2.0), 16.0);
  EXPECT_EQ(eval_power(PowerGrowthFn(2, 3), 2.0), 16.0);
}

TEST(PowerGrowth, ZeroExponentIsSign) {
  EXPECT_EQ(signed_power(0.0, 0.0), 1.0);
  EXPECT_EQ(signed_power(-4.0, 0.0), -1.0);
  EXPECT_EQ(signed_power(0.0, 2.5), 0.0);
}

TEST(PowerGrowth, RejectsInvalidParameters) {
  EXPECT_THROW(PowerGrowthFn(0.0, 2.0), ConfigError);
  EXPECT_THROW(PowerGrowthFn(1.0, -0.5), ConfigError);
}

TEST(PowerGrowth, OddSymmetry) {
  Rng rng(7);
  std::uniform_real_distribution<double> x(-50, 50), b(0.1, 6);
  for (int i = 0; i < 2000; ++i) {
    const PowerGrowthFn f(1.3, b(rng));
    const double v = x(rng);
    EXPECT_EQ(f(-v), -f(v));
  }
}

TEST(PowerGrowth, AsymptoticRatio) {
  const PowerGrowthFn f(2.5, 3.7);
  for (double x : {1e2, 1e5, 1e10}) EXPECT_NEAR(std::fabs(f(x)) / (2.5 * std::pow(x, 3.7)), 1.0, 1e-12);
}

TEST(StepParametric, HandValues) {
  const PowerGrowthFn sq(1, 2);
  EXPECT_EQ(*step_parametric(1, 1, -1, 0, sq), 0.0);
  EXPECT_DOUBLE_EQ(*step_parametric(2, 0.5, 0, 0.1, sq), 2.1);
  EXPECT_EQ(*step_parametric(10, 1, 0, 0, PowerGrowthFn(1, 4)), 10000.0);
}

TEST(StepParametric, GuardTrips) {
  EXPECT_FALSE(step_parametric(1e40, 1, 0, 0, PowerGrowthFn(1, 4)).has_value());
  EXPECT_FALSE(guarded(std::nan("")).has_value());
  EXPECT_FALSE(guarded(1.1e150).has_value());
  EXPECT_TRUE(guarded(1e150).has_value());
}

TEST(StepPolynomial, HandValues) {
  const PolyRegressors regs({2, 1}, {0, 0});
  const std::vector<double> theta{1, 1};
  EXPECT_EQ(*step_polynomial(1, theta, 0, 0, regs), 2.0);
  EXPECT_EQ(*step_polynomial(0, theta, 3, -1, regs), 2.0);
}

TEST(StepPolynomial, ReducesToParametric) {
  Rng rng(11);
  std::uniform_real_distribution<double> x(-20, 20), b(0.2, 5), th(-2, 2);
  for (int i = 0; i < 2000; ++i) {
    const double e = b(rng);
    const PolyRegressors regs({e}, {0});
    const std::vector<double> theta{th(rng)};
    const double y = x(rng), u = x(rng), w = x(rng);
    const auto a = step_polynomial(y, theta, u, w, regs);
    const auto c = step_parametric(y, theta[0], u, w, PowerGrowthFn(1, e));
    ASSERT_EQ(a.has_value(), c.has_value());
    if (a) EXPECT_EQ(*a, *c);
  }
}

TEST(PolyRegressors, Validation) {
  EXPECT_THROW(PolyRegressors({1, 2}, {0, 0}), ConfigError);
  EXPECT_THROW(PolyRegressors({2, 0}, {0, 0}), ConfigError);
  EXPECT_THROW(PolyRegressors({2}, {0, 0}), ConfigError);
  EXPECT_THROW(PolyRegressors({}, {}), ConfigError);
}

TEST(StepNonparametric, HandValues) {
  const ScalarFn zero = [](double) { return 0.0; };
  EXPECT_EQ(*step_nonparametric(17, zero, 1, -1), 0.0);

  const PiecewiseLinearFn lin(2.0, {{0, 0}, {1, 2}}, Extension::Linear);
  EXPECT_EQ(*step_nonparametric(3, [&](double x) { return lin(x); }, -6, 0), 0.0);

  const PiecewiseLinearFn mc(1.0, {{0, 0}});
  EXPECT_EQ(*step_nonparametric(5, [&](double x) { return mc(x); }, 0, 0), 5.0);
}

TEST(StepHighOrder, HandValues) {
  const std::vector<double> window{1, -2};
  const WindowFn constant = [](std::span<const double>) { return 4.0; };
  EXPECT_EQ(*step_highorder(window, constant, 1, 0.5), 5.5);

  LipschitzFnL1 f(2, 1.0);
  f.commit(std::vector<double>{0, 0}, 0.0);
  EXPECT_EQ(*step_highorder(window, [&](std::span<const double> x) { return f(x); }, 0, 0), 3.0);
}

TEST(StepHighOrder, OrderOneMatchesNonparametric) {
  const PiecewiseLinearFn g(1.5, {{-3, 1}, {2, 0.5}, {7, 4}});
  LipschitzFnL1 h(1, 1.5);
  for (const auto& a : g.anchors()) h.commit(std::vector<double>{a.x}, a.v);
  for (double y : {-10.0, -3.0, 0.0, 1.0, 4.5, 12.0}) {
    const std::vector<double> w{y};
    EXPECT_EQ(*step_highorder(w, [&](std::span<const double> x) { return h(x); }, 0.25, -0.5),
              *step_nonparametric(y, [&](double x) { return g(x); }, 0.25, -0.5));
  }
}

TEST(IntegrateSampled, ClosedForms) {
  EXPECT_NEAR(*integrate_sampled(1, [](double) { return 0.0; }, 2, SampledSpec(1, 1, 0.5)), 2.0, 1e-14);
  EXPECT_NEAR(*integrate_sampled(1, [](double x) { return x; }, 0, SampledSpec(1, 1, 1)), std::numbers::e, 1e-6);
  EXPECT_NEAR(*integrate_sampled(4, [](double x) { return -x; }, 0, SampledSpec(1, 1, std::log(2.0))), 2.0, 1e-6);
}

TEST(IntegrateSampled, FourthOrderConvergence) {
  const double l = 2.0, h = 1.0;
  const double exact = std::exp(l * h);
  double prev = 0.0;
  for (int n = 2; n <= 64; n *= 2) {
    const double err = std::fabs(*integrate_sampled(1, [l](double x) { return l * x; }, 0, SampledSpec(l, 1, h, n)) - exact) / exact;
    if (prev > 1e-12 && err > 1e-12) EXPECT_LE(err * 10, prev) << "substeps " << n;
    prev = err;
  }
}

TEST(IntegrateSampled, MatchesRk4AmplificationPolynomial) {
  // On x' = a x one RK4 step multiplies by the degree-4 Taylor polynomial of e^z.
  for (double lh : {0.5, 2.0, 8.0}) {
    const double z = lh / 64;
    const double per_step = 1 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24;
    const double oracle = std::pow(per_step, 64);
    const double got = *integrate_sampled(1, [lh](double x) { return lh * x; }, 0, SampledSpec(lh, 1, 1.0));
    EXPECT_NEAR(got / oracle, 1.0, 1e-13) << lh;
  }
}

TEST(IntegrateSampled, AccuracyAtDefaultResolution) {
  // Leading global error of 64 RK4 steps on x' = a x is (ah)^5 / (120 * 64^4).
  for (double lh : {0.5, 2.0, 8.0}) {
    const double got = *integrate_sampled(1, [lh](double x) { return lh * x; }, 0, SampledSpec(lh, 1, 1.0));
    const double bound = 1.1 * std::pow(lh, 5) / (120 * std::pow(64.0, 4));
    EXPECT_LE(std::fabs(got - std::exp(lh)) / std::exp(lh), bound) << lh;
  }
}

TEST(IntegrateSampled, GuardTripsMidFlow) {
  EXPECT_FALSE(integrate_sampled(1e149, [](double x) { return 100 * x; }, 0, SampledSpec(100, 1, 1)).has_value());
}

TEST(SampledSpec, Validation) {
  EXPECT_THROW(SampledSpec(0, 1, 1), ConfigError);
  EXPECT_THROW(SampledSpec(1, 0, 1), ConfigError);
  EXPECT_THROW(SampledSpec(1, 1, 0), ConfigError);
  EXPECT_THROW(SampledSpec(1, 1, 1, 0), ConfigError);
}

MjlsSpec scalar_spec(double a, double b) {
  return MjlsSpec(MarkovChain(Eigen::MatrixXd::Identity(1, 1)), {Eigen::MatrixXd::Constant(1, 1, a)},
                  {Eigen::MatrixXd::Constant(1, 1, b)}, MartingaleDiffVector{1, 1, 1});
}

TEST(StepMjls, HandValues) {
  const auto spec = scalar_spec(0.5, 1.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 2), u = Eigen::VectorXd::Constant(1, 1),
                        w = Eigen::VectorXd::Constant(1, 0.1);
  EXPECT_DOUBLE_EQ(step_mjls(x, 0, u, w, spec)(0), 2.1);

  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << 1, 2, 3, 4;
  b << 5, 6;
  const MjlsSpec two(MarkovChain(Eigen::MatrixXd::Identity(1, 1)), {a}, {b}, MartingaleDiffVector{1, 2, 2});
  const Eigen::Vector2d x2(1, -1);
  const Eigen::VectorXd u1 = Eigen::VectorXd::Constant(1, 2);
  EXPECT_EQ(step_mjls(x2, 0, Eigen::VectorXd::Zero(1), Eigen::Vector2d::Zero(), two), a * x2);
  EXPECT_EQ(step_mjls(Eigen::Vector2d::Zero(), 0, u1, Eigen::Vector2d::Zero(), two), b * u1);
}

TEST(StepMjls, DimensionMismatch) {
  const auto spec = scalar_spec(0.5, 1.0);
  EXPECT_THROW(step_mjls(Eigen::VectorXd::Zero(2), 0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), spec),
               ConfigError);
  EXPECT_THROW(step_mjls(Eigen::VectorXd::Zero(1), 3, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), spec),
               ConfigError);
}

TEST(MarkovChain, Validation) {
  Eigen::MatrixXd bad_sum(2, 2);
  bad_sum << 0.5, 0.6, 0.5, 0.5;
  EXPECT_THROW(MarkovChain{bad_sum}, ConfigError);
  Eigen::MatrixXd negative(2, 2);
  negative << 1.5, -0.5, 0.5, 0.5;
  EXPECT_THROW(MarkovChain{negative}, ConfigError);
  Eigen::MatrixXd reducible(2, 2);
  reducible << 1, 0, 0.5, 0.5;
  EXPECT_THROW(MarkovChain{reducible}, ConfigError);
  Eigen::MatrixXd periodic(2, 2);
  periodic << 0, 1, 1, 0;
  EXPECT_THROW(MarkovChain{periodic}, ConfigError);
  EXPECT_EQ(MarkovChain::period(periodic), 2u);
  Eigen::MatrixXd cycle3 = Eigen::MatrixXd::Zero(3, 3);
  cycle3(0, 1) = cycle3(1, 2) = cycle3(2, 0) = 1;
  EXPECT_EQ(MarkovChain::period(cycle3), 3u);
  cycle3(0, 1) = 0.5;
  cycle3(0, 0) = 0.5;
  EXPECT_EQ(MarkovChain::period(cycle3), 1u);
}

TEST(MarkovChain, IdentityKeepsMode) {
  const MarkovChain one(Eigen::MatrixXd::Identity(1, 1));
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(markov_next(0, one, rng), 0u);
}

TEST(MarkovChain, DegenerateRow) {
  Eigen::MatrixXd p(2, 2);
  p << 0, 1, 0.5, 0.5;
  const MarkovChain chain(p);
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(markov_next(0, chain, rng), 1u);
}

TEST(MarkovChain, UniformFrequencies) {
  const MarkovChain chain(Eigen::MatrixXd::Constant(2, 2, 0.5));
  Rng rng(2024);
  int first = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) first += markov_next(1, chain, rng) == 0;
  const double freq = static_cast<double>(first) / draws;
  EXPECT_GE(freq, 0.49);
  EXPECT_LE(freq, 0.51);
}

TEST(MarkovChain, RowFrequenciesConverge) {
  Eigen::MatrixXd p(3, 3);
  p << 0.2, 0.5, 0.3, 0.6, 0.1, 0.3, 0.25, 0.25, 0.5;
  const MarkovChain chain(p);
  Rng rng(99);
  const int draws = 40000;
  for (std::size_t from = 0; from < 3; ++from) {
    std::vector<int> counts(3, 0);
    for (int i = 0; i < draws; ++i) {
      const auto to = markov_next(from, chain, rng);
      ASSERT_LT(to, 3u);
      ++counts[to];
    }
    for (std::size_t to = 0; to < 3; ++to)
      EXPECT_NEAR(static_cast<double>(counts[to]) / draws, p(from, to), 3.0 / std::sqrt(draws));
  }
}

TEST(Noise, ValidationAndSampling) {
  EXPECT_THROW(validate(GaussianIid{0.0}), ConfigError);
  EXPECT_THROW(validate(BoundedRandom{-1.0}), ConfigError);
  EXPECT_THROW(validate(MartingaleDiffVector{1.0, 1.5, 2}), ConfigError);
  Rng rng(1);
  EXPECT_THROW(sample_scalar_noise(BoundedAdversarial{1.0}, rng), std::logic_error);
  for (int i = 0; i < 1000; ++i) {
    const double w = sample_scalar_noise(BoundedRandom{0.7}, rng);
    EXPECT_LE(std::fabs(w), 0.7);
  }
  double s = 0, ss = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double w = sample_scalar_noise(GaussianIid{4.0}, rng);
    s += w;
    ss += w * w;
  }
  EXPECT_NEAR(s / n, 0.0, 0.05);
  EXPECT_NEAR(ss / n, 4.0, 0.15);
}

TEST(Noise, DeterministicPerSeed) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i)
    EXPECT_EQ(sample_scalar_noise(GaussianIid{1.0}, a), sample_scalar_noise(GaussianIid{1.0}, b));
  const auto va = sample_vector_noise(MartingaleDiffVector{0.5, 1.0, 2}, a);
  const auto vb = sample_vector_noise(MartingaleDiffVector{0.5, 1.0, 2}, b);
  EXPECT_EQ(va, vb);
}

}  // namespace
}  // namespace fbl
