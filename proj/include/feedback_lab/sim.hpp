#pragma once

// Closed-loop episodes, Monte Carlo aggregation and verdicts.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "feedback_lab/adversary.hpp"
#include "feedback_lab/controllers.hpp"
#include "feedback_lab/lipschitz.hpp"
#include "feedback_lab/models.hpp"

namespace fbl {

/// Where the unknown nonlinearity of a nonparametric system comes from.
enum class FnSource {
  Fixed,      // supplied up front
  Random,     // random member of the class, drawn per episode
  Adversary,  // built online by the greedy adversary (adversarial noise too)
};

const char* to_string(FnSource s);

/// y_{t+1} = theta f(y_t) + u_t + w_{t+1}, theta ~ N(theta_mean, theta_sd^2).
struct ParametricSystem {
  PowerGrowthFn f{1.0, 2.0};
  double theta_mean = 0.0;
  double theta_sd = 1.0;
  double noise_variance = 1.0;
  double y0 = 0.0;
};

/// y_{t+1} = sum_i theta_i y_t^{b_i} + u_t + w_{t+1}, theta ~ N(theta_mean, I).
struct PolynomialSystem {
  PolyRegressors regs{{2.0}, {0.0}};
  double noise_variance = 1.0;
  double y0 = 0.0;
};

/// y_{t+1} = f(y_t) + u_t + w_{t+1}, f in F(L), |w| <= w_bar.
struct NonparametricSystem {
  double lipschitz = 2.0;
  double w_bar = 1.0;
  FnSource source = FnSource::Random;
  std::optional<PiecewiseLinearFn> fixed;
  std::size_t random_anchors = 20;
  double random_range = 50.0;
  /// Clip for unbounded feasible intervals; defaults to 10 * w_bar.
  std::optional<double> budget_c;
  double y0 = 0.0;
  /// When set, y0 ~ U[-y0_range, y0_range] per episode.
  std::optional<double> y0_range = 10.0;

  double budget() const { return budget_c.value_or(10.0 * w_bar); }
};

/// y_{t+1} = f(y_t, ..., y_{t-p+1}) + u_t + w_{t+1}, f L-Lipschitz in l1.
struct HighOrderSystem {
  std::size_t order = 2;
  double lipschitz = 1.0;
  double w_bar = 1.0;
  FnSource source = FnSource::Adversary;
  std::optional<LipschitzFnL1> fixed;
  std::optional<double> budget_c;
  /// (y_0, y_{-1}, ..., y_{-p+1}); zeros when empty.
  std::vector<double> initial_window;

  double budget() const { return budget_c.value_or(10.0 * w_bar); }
};

/// x' = f(x) + u under zero-order hold, f in G^L_c.
struct SampledSystem {
  SampledSpec spec{1.0, 1.0, 0.5};
  FnSource source = FnSource::Random;
  std::optional<GrowthBoundedFn> fixed;
  std::size_t random_anchors = 30;
  double random_range = 20.0;
  double x0 = 0.0;
  std::optional<double> x0_range;
};

struct MjlsSystem {
  MjlsSpec spec;
  Eigen::VectorXd x0;
  std::size_t initial_mode = 0;
};

using SystemSpec =
    std::variant<ParametricSystem, PolynomialSystem, NonparametricSystem, HighOrderSystem, SampledSystem, MjlsSystem>;

struct ZeroLaw {};
struct MvRlsLaw {
  /// Prior matched to theta ~ N(theta_mean, theta_sd^2) when set; otherwise `rls`.
  bool bayes = true;
  RlsConfig rls{};
};
struct SwitchingLaw {
  /// Defaults to 0.1 * w_bar.
  std::optional<double> eps;
};
struct SampledLaw {
  double kappa = 4.0;
};
struct MjlsLaw {
  /// Solved from the coupled Riccati equations when absent.
  std::optional<std::vector<Eigen::MatrixXd>> gains;
};

using ControllerSpec = std::variant<ZeroLaw, MvRlsLaw, SwitchingLaw, SampledLaw, MjlsLaw>;

struct Trajectory {
  std::size_t state_dim = 1;
  std::size_t input_dim = 1;
  std::vector<double> states;  // (steps + 1) * state_dim
  std::vector<double> inputs;  // steps * input_dim
  std::vector<double> noises;  // steps * state_dim, w_{t+1} used to reach state t+1
  std::vector<std::size_t> modes;  // MJLS: mode in force at step t
  std::vector<double> parameters;  // sampled theta
  std::vector<double> prehistory;  // high order: y_{-1}, ..., y_{-p+1}
  std::vector<Anchor> realized;    // scalar nonlinearity actually used
  std::vector<LipschitzFnL1::Point> realized_nd;

  std::size_t steps() const { return inputs.size() / input_dim; }
  std::span<const double> state(std::size_t t) const {
    return std::span<const double>(states).subspan(t * state_dim, state_dim);
  }
  std::span<const double> input(std::size_t t) const {
    return std::span<const double>(inputs).subspan(t * input_dim, input_dim);
  }
  std::span<const double> noise(std::size_t t) const {
    return std::span<const double>(noises).subspan(t * state_dim, state_dim);
  }
};

enum class Outcome { Bounded, Blowup, Inconclusive };
const char* to_string(Outcome o);

struct EpisodeVerdict {
  Outcome outcome = Outcome::Bounded;
  /// Step whose update tripped the guard.
  std::optional<std::size_t> blowup_step;
  double sup_abs_state = 0.0;
  /// sum_{t=1}^{T} ||x_t - w_t||^2 over the recorded steps.
  double regret = 0.0;
  std::size_t horizon = 0;
  /// Cumulative regret at T = 1, 2, 4, ... reached by the episode.
  std::vector<std::pair<std::size_t, double>> regret_checkpoints;
};

struct Episode {
  Trajectory trajectory;
  EpisodeVerdict verdict;
};

Episode run_episode(const SystemSpec& system, const ControllerSpec& controller, std::size_t horizon,
                    std::uint64_t seed);

/// Runs a caller-owned scalar law (used for causality probes and custom laws).
Episode run_scalar_episode(const SystemSpec& system, ScalarFeedbackLaw& law, std::size_t horizon, std::uint64_t seed);

/// Recomputes every stored transition from the trajectory alone; returns the
/// first step whose recomputed next state differs bit-wise.
std::optional<std::size_t> replay_mismatch(const SystemSpec& system, const Trajectory& traj);

/// sum_{t=1}^{T} ||x_t - w_t||^2 straight from the stored arrays.
double trajectory_regret(const Trajectory& traj);

// ---------------------------------------------------------------------------
// Monte Carlo.

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z);
/// Per-episode seed: mix64(master ^ mix64(index + 1)).
std::uint64_t episode_seed(std::uint64_t master, std::uint64_t index);

struct McConfig {
  SystemSpec system;
  ControllerSpec controller;
  std::size_t horizon = 1000;
  std::size_t seeds = 100;
  std::uint64_t master_seed = 1;
  /// 0 = hardware concurrency.
  std::size_t threads = 0;
  bool mean_sq_curve = true;
  /// Episodes whose sup |state| exceeds this level are counted as escapes.
  std::optional<double> escape_level;
};

struct RegretPoint {
  std::size_t horizon = 0;
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal approximation
  std::size_t count = 0;

  friend bool operator==(const RegretPoint&, const RegretPoint&) = default;
};

struct McReport {
  std::size_t seeds = 0;
  std::size_t blowups = 0;
  std::size_t inconclusive = 0;
  double blowup_fraction = 0.0;
  /// Episodes that stayed bounded; all curves below average over these.
  std::size_t bounded = 0;
  std::vector<double> mean_sq_curve;
  std::vector<double> mean_sq_half_width;
  std::vector<RegretPoint> regret_vs_logT;
  double max_sup_abs_state = 0.0;
  std::size_t escapes = 0;

  friend bool operator==(const McReport&, const McReport&) = default;
};

McReport monte_carlo(const McConfig& cfg);

/// Aggregates already-run episodes in index order.
McReport aggregate(std::span<const EpisodeVerdict> verdicts, std::span<const std::vector<double>> sq_norms,
                   std::optional<double> escape_level = std::nullopt);

struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least squares of mean regret against ln T over checkpoints
/// 2^min_exp..2^max_exp. Throws std::invalid_argument with < 5 points.
LogFit regret_logfit(const McReport& report, int min_exp = 7, int max_exp = 13);
LogFit log_fit(std::span<const double> horizons, std::span<const double> values);

struct GrowthAudit {
  /// log|x_{k+1}| / log|x_k| where |x_k| > 1.
  std::vector<double> log_ratios;
  /// |x_{k+1}| / |x_k| where x_k != 0.
  std::vector<double> multipliers;
};

GrowthAudit growth_audit(std::span<const double> magnitudes);
/// Empty unless the episode blew up.
GrowthAudit growth_rate_audit(const Episode& episode);

}  // namespace fbl
