#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "feedback_lab/analysis.hpp"
#include "feedback_lab/controllers.hpp"
#include "feedback_lab/riccati.hpp"

namespace fbl {
namespace {

TEST(Rls, ZeroRegressorOnlyAdvancesTime) {
  RlsState s(RlsConfig{2.0, 0.7});
  const auto next = rls_update(s, 0.0, 123.0);
  EXPECT_EQ(next.theta_hat(), 0.7);
  EXPECT_EQ(next.info(), s.info());
  EXPECT_EQ(next.t(), 1u);
}

TEST(Rls, OnePointLeastSquaresWithoutPrior) {
  const auto s = rls_update(RlsState(RlsConfig{0.0, 5.0}), 4.0, 10.0);
  EXPECT_DOUBLE_EQ(s.theta_hat(), 2.5);
  EXPECT_DOUBLE_EQ(s.info(), 16.0);
}

TEST(Rls, MatchesBatchRegularizedLeastSquares) {
  Rng rng(12);
  std::normal_distribution<double> g(0, 1);
  const double s0 = 0.5, th0 = -0.3;
  RlsState s(RlsConfig{s0, th0});
  double num = s0 * th0, den = s0;
  for (int i = 0; i < 500; ++i) {
    const double phi = 3 * g(rng), z = 1.7 * phi + g(rng);
    s.update(phi, z);
    num += phi * z;
    den += phi * phi;
    ASSERT_NEAR(s.theta_hat(), num / den, 1e-10 * (1 + std::fabs(num / den)));
    ASSERT_NEAR(s.info(), den, 1e-9 * den);
  }
}

TEST(Rls, NoiseFreeConvergesMonotonically) {
  const double truth = -1.4;
  RlsState s(RlsConfig{1e-6, 0.0});
  double err = std::fabs(truth);
  Rng rng(3);
  std::uniform_real_distribution<double> phi(-2, 2);
  for (int i = 0; i < 50; ++i) {
    const double p = phi(rng);
    s.update(p, truth * p);
    const double e = std::fabs(s.theta_hat() - truth);
    EXPECT_LE(e, err + 1e-15);
    err = e;
  }
  RlsState exact(RlsConfig{0.0, 9.0});
  exact.update(0.0, 0.0);
  exact.update(0.8, truth * 0.8);
  EXPECT_DOUBLE_EQ(exact.theta_hat(), truth);
}

TEST(Rls, RejectsNegativePrior) { EXPECT_THROW(RlsState(RlsConfig{-1.0, 0.0}), ConfigError); }

TEST(AdaptiveMv, ControlExamples) {
  RlsState s(RlsConfig{0.0, 0.0});
  s.update(1.0, 2.0);
  EXPECT_EQ(adaptive_mv_control(s, 3.0), -6.0);
  EXPECT_EQ(adaptive_mv_control(s, 0.0), -0.0);
}

TEST(AdaptiveMv, CancelsOnceEstimated) {
  // theta = 0.8, f(y) = y^2, noise-free: one informative step pins the
  // estimate and the next output is driven to 0.
  const PowerGrowthFn f(1, 2);
  AdaptiveMinimumVariance law(f, RlsConfig{0.0, 0.0});
  double y = 1.5;
  for (int t = 0; t < 4; ++t) {
    const double u = law.next(y);
    y = 0.8 * f(y) + u;
    if (t >= 1) EXPECT_NEAR(y, 0.0, 1e-12);
  }
  EXPECT_NEAR(law.estimator().theta_hat(), 0.8, 1e-15);
}

TEST(NnEstimate, Examples) {
  NnHistory h;
  EXPECT_THROW(nn_estimate(h, 0.0), std::logic_error);
  h.append({10.0, -1.0, 3.0});
  auto e = nn_estimate(h, -100.0);
  EXPECT_EQ(e.index, 0u);
  EXPECT_EQ(e.fhat, 4.0);
  EXPECT_EQ(e.gap, 110.0);

  NnHistory two;
  two.append({0.0, 1.0, 5.0});
  two.append({10.0, 0.0, 0.0});
  e = nn_estimate(two, 4.0);
  EXPECT_EQ(e.index, 0u);
  EXPECT_EQ(e.gap, 4.0);
  EXPECT_EQ(e.fhat, 4.0);
}

TEST(NnEstimate, TiesGoToSmallestIndex) {
  NnHistory h;
  h.append({2.0, 0.0, 1.0});
  h.append({-2.0, 0.0, 2.0});
  h.append({2.0, 0.0, 3.0});
  EXPECT_EQ(nn_estimate(h, 0.0).index, 0u);
  EXPECT_EQ(nn_estimate(h, 2.0).index, 0u);
  EXPECT_EQ(nn_estimate(h, -2.0).index, 1u);
}

TEST(NnEstimate, MatchesLinearScan) {
  Rng rng(21);
  std::uniform_real_distribution<double> pos(-5, 5);
  std::uniform_int_distribution<int> grid(-20, 20);
  NnHistory h;
  for (int i = 0; i < 300; ++i) {
    // Half-integer grid points force exact ties.
    h.append({grid(rng) * 0.5, pos(rng), pos(rng)});
    const double q = i % 2 ? grid(rng) * 0.25 : pos(rng);
    std::size_t best = 0;
    for (std::size_t k = 1; k < h.size(); ++k)
      if (std::fabs(q - h[k].y) < std::fabs(q - h[best].y)) best = k;
    ASSERT_EQ(nn_estimate(h, q).index, best);
  }
}

TEST(SwitchingControl, Branches) {
  NnHistory empty;
  EXPECT_EQ(switching_control(empty, 3.0, 0.1, 0.0), 0.0);

  NnHistory h;
  h.append({-2.0, 0.0, 1.0});  // fhat(-2) = 1
  h.append({4.0, 0.0, 7.0});   // fhat(4) = 7
  // y = 1: nearest is -2 (gap 3 > eps) so u = -1 + (-2 + 4)/2.
  EXPECT_DOUBLE_EQ(switching_control(h, 1.0, 0.5, 0.0), -1.0 + 1.0);
  // Revisit: tracking branch.
  EXPECT_DOUBLE_EQ(switching_control(h, 4.0, 0.5, 0.25), -7.0 + 0.25);
  // eps = inf always tracks.
  EXPECT_DOUBLE_EQ(switching_control(h, 1.0, std::numeric_limits<double>::infinity(), 0.0), -1.0);
  // Bounds include the current output.
  EXPECT_DOUBLE_EQ(switching_control(h, 10.0, 0.5, 0.0), -7.0 + 4.0);
}

TEST(SwitchingControl, RevisitTracksExactlyWithoutNoise) {
  const auto f = [](double y) { return 1.7 * y + std::sin(y); };
  SwitchingFeedback law(0.1, [](std::size_t t) { return t % 2 ? 1.0 : -1.0; });
  double y = 0.3;
  for (std::size_t t = 0; t < 40; ++t) {
    const double u = law.next(y);
    const bool revisit = !law.history().empty() && nn_estimate(law.history(), y).gap == 0.0;
    const double next = f(y) + u;
    if (revisit) EXPECT_EQ(next, (t + 1) % 2 ? 1.0 : -1.0) << t;
    y = next;
  }
}

TEST(SampledControl, BootstrapAndClip) {
  const SampledSpec spec(1.0, 1.0, 0.5);
  NnHistory empty;
  EXPECT_EQ(sampled_control(empty, 0.0, spec), 0.0);
  Rng rng(6);
  std::uniform_real_distribution<double> v(-100, 100);
  NnHistory h;
  for (int i = 0; i < 500; ++i) {
    h.append({v(rng), v(rng), v(rng)});
    const double x = v(rng);
    EXPECT_LE(std::fabs(sampled_control(h, x, spec)), 4.0 * (std::fabs(x) + 1.0) + 1e-12);
  }
}

TEST(SampledControl, LinearPlantContracts) {
  const double a = 0.8, h = 0.4;
  const SampledSpec spec(1.0, 1.0, h);
  SampledFeedback law(spec);
  double x = 3.0;
  double first_after_settle = 0.0;
  for (int k = 0; k < 40; ++k) {
    const double u = law.next(x);
    x = *integrate_sampled(x, [a](double z) { return a * z; }, u, spec);
    if (k == 5) first_after_settle = std::fabs(x);
  }
  EXPECT_LT(std::fabs(x), 1e-3 * std::max(first_after_settle, 1.0));
}

MjlsSpec two_mode_scalar(double a1, double a2, double p12) {
  Eigen::MatrixXd p(2, 2);
  p << 1 - p12, p12, p12, 1 - p12;
  return MjlsSpec(MarkovChain(p), {Eigen::MatrixXd::Constant(1, 1, a1), Eigen::MatrixXd::Constant(1, 1, a2)},
                  {Eigen::MatrixXd::Constant(1, 1, 1), Eigen::MatrixXd::Constant(1, 1, 1)},
                  MartingaleDiffVector{1, 1, 1});
}

TEST(MjlsController, SingleModeIsStaticFeedback) {
  const MjlsSpec spec(MarkovChain(Eigen::MatrixXd::Identity(1, 1)), {Eigen::MatrixXd::Constant(1, 1, 2.0)},
                      {Eigen::MatrixXd::Constant(1, 1, 1.0)}, MartingaleDiffVector{1, 1, 1});
  MjlsFeedback law(spec, {Eigen::MatrixXd::Constant(1, 1, 2.0)});
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 5.0);
  for (int t = 0; t < 5; ++t) {
    const auto u = law.next(x);
    EXPECT_EQ(u(0), -2.0 * x(0));
    if (t > 0) {
      EXPECT_EQ(*law.state().last_estimate(), 0u);
    }
    x = step_mjls(x, 0, u, Eigen::VectorXd::Constant(1, 0.5), spec);
  }
  EXPECT_TRUE(law.next(Eigen::VectorXd::Zero(1)).isZero());
}

TEST(MjlsController, IdenticalModesTieToFirst) {
  const auto spec = two_mode_scalar(1.0, 1.0, 0.3);
  MjlsControllerState st({Eigen::MatrixXd::Constant(1, 1, 1), Eigen::MatrixXd::Constant(1, 1, 1)}, 2);
  st.record(Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, -1.0));
  EXPECT_EQ(mjls_estimate_mode(st, Eigen::VectorXd::Constant(1, 1.0), spec), 0u);
  EXPECT_NEAR(st.posterior().sum(), 1.0, 1e-12);
}

TEST(MjlsController, ExactModeRecoveryOnNoiseFreeTrajectories) {
  Rng rng(17);
  std::normal_distribution<double> g(0, 1);
  int specs = 0;
  while (specs < 20) {
    Eigen::MatrixXd p(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
      Eigen::Vector3d r(0.2 + std::fabs(g(rng)), 0.2 + std::fabs(g(rng)), 0.2 + std::fabs(g(rng)));
      p.row(i) = (r / r.sum()).transpose();
    }
    std::vector<Eigen::MatrixXd> a(3, Eigen::MatrixXd(2, 2)), b(3, Eigen::MatrixXd(2, 1));
    for (auto* v : {&a, &b})
      for (auto& m : *v)
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 0.5 * g(rng);
    const MjlsSpec spec(MarkovChain(p), a, b, MartingaleDiffVector{1, 2, 2});
    if (!verify_h2(spec, 20, rng)) continue;
    ++specs;
    MjlsControllerState st(std::vector<Eigen::MatrixXd>(3, Eigen::MatrixXd::Zero(1, 2)), 3);
    Eigen::VectorXd x(2);
    x << g(rng), g(rng);
    std::size_t mode = 0;
    for (int t = 0; t < 30; ++t) {
      const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, g(rng));
      st.record(x, u);
      const Eigen::VectorXd next = step_mjls(x, mode, u, Eigen::VectorXd::Zero(2), spec);
      EXPECT_EQ(mjls_estimate_mode(st, next, spec), mode);
      x = next / std::max(1.0, next.norm());
      mode = markov_next(mode, spec.chain, rng);
    }
  }
}

TEST(MjlsController, ClosedLoopBoundedWhenCpBelowOne) {
  const auto spec = two_mode_scalar(0.0, 1.8, 0.5);
  ASSERT_EQ(scalar_mjls_stabilizable(0.0, 1.8, 0.5).regime, Regime::Stabilizable);
  const auto sol = solve_coupled_riccati(spec);
  ASSERT_EQ(sol.status, RiccatiStatus::Converged);
  double sum_sq = 0;
  const int seeds = 50, horizon = 400;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(1000 + s);
    MjlsFeedback law(spec, sol.solution->gains);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
    std::size_t mode = 0;
    for (int t = 0; t < horizon; ++t) {
      const auto u = law.next(x);
      x = step_mjls(x, mode, u, sample_vector_noise(spec.noise, rng), spec);
      mode = markov_next(mode, spec.chain, rng);
    }
    sum_sq += x.squaredNorm();
  }
  EXPECT_LT(sum_sq / seeds, 50.0);
}

// Causality: a law's outputs depend only on inputs already fed to it, so
// replacing the tail of an observation sequence never alters earlier outputs.
template <class Make>
void expect_causal(Make make, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> v(-5, 5);
  std::vector<double> obs(60);
  for (auto& o : obs) o = v(rng);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t cut = std::uniform_int_distribution<std::size_t>(1, obs.size() - 1)(rng);
    auto altered = obs;
    for (std::size_t k = cut; k < altered.size(); ++k) altered[k] = v(rng) * 100;
    auto a = make();
    auto b = make();
    for (std::size_t k = 0; k < cut; ++k) ASSERT_EQ(a->next(obs[k]), b->next(altered[k]));
  }
}

TEST(Causality, ScalarLawsIgnoreTheFuture) {
  expect_causal([] { return std::make_unique<AdaptiveMinimumVariance>(PowerGrowthFn(1, 2), RlsConfig{1, 0}); }, 1);
  expect_causal([] { return std::make_unique<SwitchingFeedback>(0.1); }, 2);
  expect_causal([] { return std::make_unique<SampledFeedback>(SampledSpec(1, 1, 0.5)); }, 3);
}

}  // namespace
}  // namespace fbl
