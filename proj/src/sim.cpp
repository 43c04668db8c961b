#include "feedback_lab/sim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <deque>
#include <memory>
#include <stdexcept>
#include <thread>

#include "feedback_lab/riccati.hpp"

namespace fbl {

const char* to_string(FnSource s) {
  switch (s) {
    case FnSource::Fixed: return "fixed";
    case FnSource::Random: return "random";
    case FnSource::Adversary: return "adversary";
  }
  return "?";
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Bounded: return "BOUNDED";
    case Outcome::Blowup: return "BLOWUP";
    case Outcome::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

namespace {

/// Bookkeeping shared by the scalar episode loops.
class ScalarRecorder {
 public:
  explicit ScalarRecorder(std::size_t horizon) { verdict_.horizon = horizon; }

  void start(double y0) {
    traj_.states.push_back(y0);
    verdict_.sup_abs_state = std::fabs(y0);
  }

  void push(double u, double w, double y_next) {
    traj_.inputs.push_back(u);
    traj_.noises.push_back(w);
    traj_.states.push_back(y_next);
    verdict_.sup_abs_state = std::max(verdict_.sup_abs_state, std::fabs(y_next));
    const double e = y_next - w;
    verdict_.regret += e * e;
    const auto t = traj_.inputs.size();
    if (t == next_checkpoint_) {
      verdict_.regret_checkpoints.emplace_back(t, verdict_.regret);
      next_checkpoint_ *= 2;
    }
  }

  /// f_value/u: the quantities feeding the failed update. An overflowing
  /// nonlinearity is divergence; NaN from a finite state is misuse.
  void fail(std::size_t step, double f_value, double u) {
    const bool nan = std::isnan(f_value) || (!std::isinf(f_value) && std::isnan(u));
    verdict_.outcome = nan ? Outcome::Inconclusive : Outcome::Blowup;
    if (!nan) verdict_.blowup_step = step;
  }

  Trajectory& traj() { return traj_; }
  Episode finish() { return Episode{std::move(traj_), std::move(verdict_)}; }

 private:
  Trajectory traj_;
  EpisodeVerdict verdict_;
  std::size_t next_checkpoint_ = 1;
};

double standard_normal(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

Episode run_parametric(const ParametricSystem& sys, ScalarFeedbackLaw& law, std::size_t horizon, Rng& rng) {
  ScalarRecorder rec(horizon);
  const double theta = sys.theta_mean + sys.theta_sd * standard_normal(rng);
  rec.traj().parameters = {theta};
  const NoiseModel noise = GaussianIid{sys.noise_variance};
  double y = sys.y0;
  rec.start(y);
  for (std::size_t t = 0; t < horizon; ++t) {
    const double u = law.next(y);
    const double w = sample_scalar_noise(noise, rng);
    const auto next = step_parametric(y, theta, u, w, sys.f);
    if (!next) {
      rec.fail(t, sys.f(y), u);
      break;
    }
    rec.push(u, w, *next);
    y = *next;
  }
  return rec.finish();
}

Episode run_polynomial(const PolynomialSystem& sys, ScalarFeedbackLaw& law, std::size_t horizon, Rng& rng) {
  ScalarRecorder rec(horizon);
  std::vector<double> theta(sys.regs.order());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = sys.regs.theta_mean[i] + standard_normal(rng);
  rec.traj().parameters = theta;
  const NoiseModel noise = GaussianIid{sys.noise_variance};
  double y = sys.y0;
  rec.start(y);
  for (std::size_t t = 0; t < horizon; ++t) {
    const double u = law.next(y);
    const double w = sample_scalar_noise(noise, rng);
    const auto next = step_polynomial(y, theta, u, w, sys.regs);
    if (!next) {
      rec.fail(t, signed_power(y, sys.regs.exponents.front()), u);
      break;
    }
    rec.push(u, w, *next);
    y = *next;
  }
  return rec.finish();
}

Episode run_nonparametric(const NonparametricSystem& sys, ScalarFeedbackLaw& law, std::size_t horizon, Rng& rng) {
  ScalarRecorder rec(horizon);
  PiecewiseLinearFn f(sys.lipschitz);
  switch (sys.source) {
    case FnSource::Fixed:
      if (!sys.fixed) throw ConfigError("fixed nonlinearity requested but none supplied");
      f = *sys.fixed;
      break;
    case FnSource::Random:
      f = random_lipschitz_fn(sys.lipschitz, sys.random_anchors, sys.random_range, sys.budget(), rng);
      break;
    case FnSource::Adversary: break;
  }
  const bool adversary = sys.source == FnSource::Adversary;
  const NoiseModel noise = BoundedRandom{sys.w_bar};
  double y = sys.y0_range ? uniform(rng, -*sys.y0_range, *sys.y0_range) : sys.y0;
  rec.start(y);
  const ScalarFn fn = [&f](double x) { return f(x); };
  for (std::size_t t = 0; t < horizon; ++t) {
    const double u = law.next(y);
    double w = 0.0;
    if (adversary)
      w = adversary_choose(f, y, u, sys.w_bar, sys.budget()).w;
    else
      w = sample_scalar_noise(noise, rng);
    const auto next = step_nonparametric(y, fn, u, w);
    if (!next) {
      rec.fail(t, f(y), u);
      break;
    }
    rec.push(u, w, *next);
    y = *next;
  }
  auto anchors = f.anchors();
  rec.traj().realized.assign(anchors.begin(), anchors.end());
  return rec.finish();
}

Episode run_highorder(const HighOrderSystem& sys, ScalarFeedbackLaw& law, std::size_t horizon, Rng& rng) {
  if (sys.order < 1) throw ConfigError("order must be >= 1");
  ScalarRecorder rec(horizon);
  std::optional<LipschitzFnL1> f;
  switch (sys.source) {
    case FnSource::Fixed:
      if (!sys.fixed) throw ConfigError("fixed nonlinearity requested but none supplied");
      if (sys.fixed->dim() != sys.order) throw ConfigError("fixed nonlinearity has the wrong dimension");
      f = *sys.fixed;
      break;
    case FnSource::Adversary: f.emplace(sys.order, sys.lipschitz); break;
    case FnSource::Random: throw ConfigError("random high-order nonlinearities are not supported");
  }
  const bool adversary = sys.source == FnSource::Adversary;
  std::vector<double> window = sys.initial_window;
  if (window.empty()) window.assign(sys.order, 0.0);
  if (window.size() != sys.order) throw ConfigError("initial window length must equal the order");
  rec.traj().prehistory.assign(window.begin() + 1, window.end());
  const NoiseModel noise = BoundedRandom{sys.w_bar};
  const WindowFn fn = [&f](std::span<const double> x) { return (*f)(x); };
  rec.start(window.front());
  for (std::size_t t = 0; t < horizon; ++t) {
    const double u = law.next(window.front());
    double w = 0.0;
    if (adversary)
      w = highorder_adversary_choose(*f, window, u, sys.w_bar, sys.budget()).w;
    else
      w = sample_scalar_noise(noise, rng);
    const auto next = step_highorder(window, fn, u, w);
    if (!next) {
      rec.fail(t, (*f)(window), u);
      break;
    }
    rec.push(u, w, *next);
    std::rotate(window.rbegin(), window.rbegin() + 1, window.rend());
    window.front() = *next;
  }
  auto anchors = f->anchors();
  rec.traj().realized_nd.assign(anchors.begin(), anchors.end());
  return rec.finish();
}

Episode run_sampled(const SampledSystem& sys, ScalarFeedbackLaw& law, std::size_t horizon, Rng& rng) {
  ScalarRecorder rec(horizon);
  const auto& spec = sys.spec;
  GrowthBoundedFn g(spec.lipschitz, spec.offset);
  switch (sys.source) {
    case FnSource::Fixed:
      if (!sys.fixed) throw ConfigError("fixed nonlinearity requested but none supplied");
      g = *sys.fixed;
      break;
    case FnSource::Random:
      g = random_growth_bounded_fn(spec.lipschitz, spec.offset, sys.random_anchors, sys.random_range, rng);
      break;
    case FnSource::Adversary: break;
  }
  const bool adversary = sys.source == FnSource::Adversary;
  // The adversary freezes f at every point the flow has evaluated, so later
  // commitments can never rewrite the path already travelled.
  const ScalarFn frozen = [&g](double x) {
    const double v = g(x);
    g.commit(x, v);
    return v;
  };
  const ScalarFn plain = [&g](double x) { return g(x); };
  double x = sys.x0_range ? uniform(rng, -*sys.x0_range, *sys.x0_range) : sys.x0;
  rec.start(x);
  for (std::size_t k = 0; k < horizon; ++k) {
    const double u = law.next(x);
    if (adversary) sampled_adversary_choose(g, x, u);
    const auto next = integrate_sampled(x, adversary ? frozen : plain, u, spec);
    if (!next) {
      rec.fail(k, g(x), u);
      break;
    }
    rec.push(u, 0.0, *next);
    x = *next;
  }
  auto anchors = g.core().anchors();
  rec.traj().realized.assign(anchors.begin(), anchors.end());
  return rec.finish();
}

class ZeroVectorLaw final : public VectorFeedbackLaw {
 public:
  explicit ZeroVectorLaw(std::size_t m) : m_(m) {}
  Eigen::VectorXd next(const Eigen::VectorXd&) override { return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_)); }
  std::string name() const override { return "zero"; }

 private:
  std::size_t m_;
};

Episode run_mjls(const MjlsSystem& sys, VectorFeedbackLaw& law, std::size_t horizon, Rng& rng) {
  const auto& spec = sys.spec;
  const auto n = spec.state_dim();
  const auto m = spec.input_dim();
  if (static_cast<std::size_t>(sys.x0.size()) != n) throw ConfigError("x0 has the wrong dimension");
  if (sys.initial_mode >= spec.modes()) throw ConfigError("initial mode out of range");
  Episode ep;
  auto& traj = ep.trajectory;
  auto& v = ep.verdict;
  traj.state_dim = n;
  traj.input_dim = m;
  v.horizon = horizon;
  Eigen::VectorXd x = sys.x0;
  std::size_t mode = sys.initial_mode;
  traj.states.assign(x.data(), x.data() + n);
  v.sup_abs_state = x.norm();
  std::size_t next_cp = 1;
  for (std::size_t t = 0; t < horizon; ++t) {
    const Eigen::VectorXd u = law.next(x);
    const Eigen::VectorXd w = sample_vector_noise(spec.noise, rng);
    const Eigen::VectorXd xn = step_mjls(x, mode, u, w, spec);
    const double norm = xn.norm();
    if (!std::isfinite(norm) || norm > kBlowupGuard) {
      const bool nan = xn.hasNaN() && u.hasNaN();
      v.outcome = nan ? Outcome::Inconclusive : Outcome::Blowup;
      if (!nan) v.blowup_step = t;
      break;
    }
    traj.inputs.insert(traj.inputs.end(), u.data(), u.data() + m);
    traj.noises.insert(traj.noises.end(), w.data(), w.data() + n);
    traj.states.insert(traj.states.end(), xn.data(), xn.data() + n);
    traj.modes.push_back(mode);
    v.sup_abs_state = std::max(v.sup_abs_state, norm);
    v.regret += (xn - w).squaredNorm();
    if (t + 1 == next_cp) {
      v.regret_checkpoints.emplace_back(t + 1, v.regret);
      next_cp *= 2;
    }
    x = xn;
    mode = markov_next(mode, spec.chain, rng);
  }
  return ep;
}

std::unique_ptr<ScalarFeedbackLaw> make_scalar_law(const SystemSpec& system, const ControllerSpec& controller) {
  return std::visit(
      [&system](const auto& c) -> std::unique_ptr<ScalarFeedbackLaw> {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, ZeroLaw>) {
          return std::make_unique<ZeroControl>();
        } else if constexpr (std::is_same_v<C, MvRlsLaw>) {
          const auto* sys = std::get_if<ParametricSystem>(&system);
          if (!sys) throw ConfigError("the MV-RLS law drives the scalar parametric system only");
          RlsConfig cfg = c.rls;
          if (c.bayes) cfg = {sys->noise_variance / (sys->theta_sd * sys->theta_sd), sys->theta_mean};
          return std::make_unique<AdaptiveMinimumVariance>(sys->f, cfg);
        } else if constexpr (std::is_same_v<C, SwitchingLaw>) {
          const auto* sys = std::get_if<NonparametricSystem>(&system);
          if (!sys) throw ConfigError("the switching law drives the first-order nonparametric system only");
          return std::make_unique<SwitchingFeedback>(c.eps.value_or(0.1 * sys->w_bar));
        } else if constexpr (std::is_same_v<C, SampledLaw>) {
          const auto* sys = std::get_if<SampledSystem>(&system);
          if (!sys) throw ConfigError("the sampled-data law drives the sampled system only");
          return std::make_unique<SampledFeedback>(sys->spec, c.kappa);
        } else {
          throw ConfigError("the MJLS law needs a vector-valued system");
        }
      },
      controller);
}

std::unique_ptr<VectorFeedbackLaw> make_vector_law(const MjlsSystem& sys, const ControllerSpec& controller) {
  if (std::holds_alternative<ZeroLaw>(controller)) return std::make_unique<ZeroVectorLaw>(sys.spec.input_dim());
  const auto* law = std::get_if<MjlsLaw>(&controller);
  if (!law) throw ConfigError("MJLS systems accept the zero or MJLS law only");
  if (law->gains) return std::make_unique<MjlsFeedback>(sys.spec, *law->gains);
  auto outcome = solve_coupled_riccati(sys.spec);
  if (outcome.status != RiccatiStatus::Converged)
    throw ConfigError(std::string("no Riccati gains available: ") + to_string(outcome.status));
  return std::make_unique<MjlsFeedback>(sys.spec, outcome.solution->gains);
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

}  // namespace

Episode run_scalar_episode(const SystemSpec& system, ScalarFeedbackLaw& law, std::size_t horizon, std::uint64_t seed) {
  Rng rng(seed);
  return std::visit(
      [&](const auto& sys) -> Episode {
        using S = std::decay_t<decltype(sys)>;
        if constexpr (std::is_same_v<S, ParametricSystem>) return run_parametric(sys, law, horizon, rng);
        else if constexpr (std::is_same_v<S, PolynomialSystem>) return run_polynomial(sys, law, horizon, rng);
        else if constexpr (std::is_same_v<S, NonparametricSystem>) return run_nonparametric(sys, law, horizon, rng);
        else if constexpr (std::is_same_v<S, HighOrderSystem>) return run_highorder(sys, law, horizon, rng);
        else if constexpr (std::is_same_v<S, SampledSystem>) return run_sampled(sys, law, horizon, rng);
        else throw ConfigError("scalar law on a vector-valued system");
      },
      system);
}

Episode run_episode(const SystemSpec& system, const ControllerSpec& controller, std::size_t horizon,
                    std::uint64_t seed) {
  if (const auto* mj = std::get_if<MjlsSystem>(&system)) {
    auto law = make_vector_law(*mj, controller);
    Rng rng(seed);
    return run_mjls(*mj, *law, horizon, rng);
  }
  auto law = make_scalar_law(system, controller);
  return run_scalar_episode(system, *law, horizon, seed);
}

std::optional<std::size_t> replay_mismatch(const SystemSpec& system, const Trajectory& traj) {
  const auto steps = traj.steps();
  if (traj.states.size() != (steps + 1) * traj.state_dim || traj.noises.size() != steps * traj.state_dim)
    return 0;
  auto check_scalar = [&](auto&& step) -> std::optional<std::size_t> {
    for (std::size_t t = 0; t < steps; ++t) {
      const auto next = step(t);
      if (!next || !same_bits(*next, traj.states[t + 1])) return t;
    }
    return std::nullopt;
  };
  return std::visit(
      [&](const auto& sys) -> std::optional<std::size_t> {
        using S = std::decay_t<decltype(sys)>;
        if constexpr (std::is_same_v<S, ParametricSystem>) {
          const double theta = traj.parameters.at(0);
          return check_scalar([&](std::size_t t) {
            return step_parametric(traj.states[t], theta, traj.inputs[t], traj.noises[t], sys.f);
          });
        } else if constexpr (std::is_same_v<S, PolynomialSystem>) {
          return check_scalar([&](std::size_t t) {
            return step_polynomial(traj.states[t], traj.parameters, traj.inputs[t], traj.noises[t], sys.regs);
          });
        } else if constexpr (std::is_same_v<S, NonparametricSystem>) {
          const PiecewiseLinearFn f = sys.source == FnSource::Fixed
                                          ? *sys.fixed
                                          : PiecewiseLinearFn(sys.lipschitz, traj.realized, Extension::McShaneMin);
          const ScalarFn fn = [&f](double x) { return f(x); };
          return check_scalar([&](std::size_t t) {
            return step_nonparametric(traj.states[t], fn, traj.inputs[t], traj.noises[t]);
          });
        } else if constexpr (std::is_same_v<S, HighOrderSystem>) {
          LipschitzFnL1 f(sys.order, sys.lipschitz);
          if (sys.source == FnSource::Fixed) {
            f = *sys.fixed;
          } else {
            for (const auto& a : traj.realized_nd) f.commit(a.x, a.v);
          }
          const WindowFn fn = [&f](std::span<const double> x) { return f(x); };
          // window at t: y_t, y_{t-1}, ... falling back to the prehistory
          std::vector<double> window(sys.order);
          return check_scalar([&](std::size_t t) {
            for (std::size_t k = 0; k < sys.order; ++k)
              window[k] = k <= t ? traj.states[t - k] : traj.prehistory[k - t - 1];
            return step_highorder(window, fn, traj.inputs[t], traj.noises[t]);
          });
        } else if constexpr (std::is_same_v<S, SampledSystem>) {
          const GrowthBoundedFn g = sys.source == FnSource::Fixed
                                        ? *sys.fixed
                                        : GrowthBoundedFn(PiecewiseLinearFn(sys.spec.lipschitz, traj.realized),
                                                          sys.spec.offset);
          const ScalarFn fn = [&g](double x) { return g(x); };
          return check_scalar(
              [&](std::size_t t) { return integrate_sampled(traj.states[t], fn, traj.inputs[t], sys.spec); });
        } else {
          const auto n = static_cast<Eigen::Index>(traj.state_dim);
          const auto m = static_cast<Eigen::Index>(traj.input_dim);
          for (std::size_t t = 0; t < steps; ++t) {
            const Eigen::Map<const Eigen::VectorXd> x(traj.states.data() + t * traj.state_dim, n);
            const Eigen::Map<const Eigen::VectorXd> u(traj.inputs.data() + t * traj.input_dim, m);
            const Eigen::Map<const Eigen::VectorXd> w(traj.noises.data() + t * traj.state_dim, n);
            const Eigen::VectorXd xn = step_mjls(x, traj.modes.at(t), u, w, sys.spec);
            for (Eigen::Index i = 0; i < n; ++i)
              if (!same_bits(xn(i), traj.states[(t + 1) * traj.state_dim + static_cast<std::size_t>(i)])) return t;
          }
          return std::nullopt;
        }
      },
      system);
}

double trajectory_regret(const Trajectory& traj) {
  double total = 0.0;
  for (std::size_t t = 1; t <= traj.steps(); ++t) {
    const auto x = traj.state(t);
    const auto w = traj.noise(t - 1);
    for (std::size_t i = 0; i < traj.state_dim; ++i) total += (x[i] - w[i]) * (x[i] - w[i]);
  }
  return total;
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t episode_seed(std::uint64_t master, std::uint64_t index) { return mix64(master ^ mix64(index + 1)); }

McReport aggregate(std::span<const EpisodeVerdict> verdicts, std::span<const std::vector<double>> sq_norms,
                   std::optional<double> escape_level) {
  McReport r;
  r.seeds = verdicts.size();
  std::vector<std::size_t> bounded;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const auto& v = verdicts[i];
    r.max_sup_abs_state = std::max(r.max_sup_abs_state, v.sup_abs_state);
    if (escape_level && (v.outcome == Outcome::Blowup || v.sup_abs_state > *escape_level)) ++r.escapes;
    if (v.outcome == Outcome::Blowup) ++r.blowups;
    else if (v.outcome == Outcome::Inconclusive) ++r.inconclusive;
    else bounded.push_back(i);
  }
  r.blowup_fraction = r.seeds ? static_cast<double>(r.blowups) / static_cast<double>(r.seeds) : 0.0;
  r.bounded = bounded.size();
  if (bounded.empty()) return r;

  const auto n = static_cast<double>(bounded.size());
  auto mean_hw = [n](double sum, double sumsq) {
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sumsq - n * mean * mean) / (n - 1)) : 0.0;
    return std::pair{mean, 1.96 * std::sqrt(var / n)};
  };

  if (!sq_norms.empty()) {
    std::size_t len = sq_norms[bounded.front()].size();
    for (auto i : bounded) len = std::min(len, sq_norms[i].size());
    r.mean_sq_curve.resize(len);
    r.mean_sq_half_width.resize(len);
    for (std::size_t t = 0; t < len; ++t) {
      double s = 0.0, ss = 0.0;
      for (auto i : bounded) {
        s += sq_norms[i][t];
        ss += sq_norms[i][t] * sq_norms[i][t];
      }
      std::tie(r.mean_sq_curve[t], r.mean_sq_half_width[t]) = mean_hw(s, ss);
    }
  }

  std::size_t cps = verdicts[bounded.front()].regret_checkpoints.size();
  for (auto i : bounded) cps = std::min(cps, verdicts[i].regret_checkpoints.size());
  for (std::size_t k = 0; k < cps; ++k) {
    double s = 0.0, ss = 0.0;
    for (auto i : bounded) {
      const double v = verdicts[i].regret_checkpoints[k].second;
      s += v;
      ss += v * v;
    }
    RegretPoint p;
    p.horizon = verdicts[bounded.front()].regret_checkpoints[k].first;
    std::tie(p.mean, p.half_width) = mean_hw(s, ss);
    p.count = bounded.size();
    r.regret_vs_logT.push_back(p);
  }
  return r;
}

McReport monte_carlo(const McConfig& cfg) {
  if (cfg.seeds < 1) throw ConfigError("monte carlo needs at least one seed");
  std::vector<EpisodeVerdict> verdicts(cfg.seeds);
  std::vector<std::vector<double>> sq(cfg.mean_sq_curve ? cfg.seeds : 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};

  auto worker = [&]() {
    for (std::size_t i = next++; i < cfg.seeds && !failed; i = next++) {
      try {
        auto ep = run_episode(cfg.system, cfg.controller, cfg.horizon, episode_seed(cfg.master_seed, i));
        if (cfg.mean_sq_curve) {
          const auto& tr = ep.trajectory;
          auto& out = sq[i];
          out.resize(tr.steps() + 1);
          for (std::size_t t = 0; t <= tr.steps(); ++t) {
            double s = 0.0;
            for (double v : tr.state(t)) s += v * v;
            out[t] = s;
          }
        }
        verdicts[i] = std::move(ep.verdict);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };

  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.seeds);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return aggregate(verdicts, sq, cfg.escape_level);
}

LogFit log_fit(std::span<const double> horizons, std::span<const double> values) {
  if (horizons.size() != values.size()) throw std::invalid_argument("log_fit: size mismatch");
  if (horizons.size() < 5) throw std::invalid_argument("log_fit: need at least 5 checkpoints");
  const auto n = static_cast<double>(horizons.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    mx += std::log(horizons[i]);
    my += values[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    const double dx = std::log(horizons[i]) - mx;
    const double dy = values[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LogFit fit;
  fit.points = horizons.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    const double e = values[i] - (fit.intercept + fit.slope * std::log(horizons[i]));
    ss_res += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

LogFit regret_logfit(const McReport& report, int min_exp, int max_exp) {
  std::vector<double> hs, vs;
  for (const auto& p : report.regret_vs_logT) {
    const auto k = std::countr_zero(p.horizon);
    if (std::has_single_bit(p.horizon) && k >= min_exp && k <= max_exp) {
      hs.push_back(static_cast<double>(p.horizon));
      vs.push_back(p.mean);
    }
  }
  return log_fit(hs, vs);
}

GrowthAudit growth_audit(std::span<const double> magnitudes) {
  GrowthAudit a;
  for (std::size_t k = 0; k + 1 < magnitudes.size(); ++k) {
    const double cur = std::fabs(magnitudes[k]);
    const double nxt = std::fabs(magnitudes[k + 1]);
    if (cur > 1.0 && nxt > 0.0) a.log_ratios.push_back(std::log(nxt) / std::log(cur));
    if (cur > 0.0) a.multipliers.push_back(nxt / cur);
  }
  return a;
}

GrowthAudit growth_rate_audit(const Episode& episode) {
  if (episode.verdict.outcome != Outcome::Blowup) return {};
  const auto& tr = episode.trajectory;
  std::vector<double> mags(tr.steps() + 1);
  for (std::size_t t = 0; t < mags.size(); ++t) {
    double s = 0.0;
    for (double v : tr.state(t)) s += v * v;
    mags[t] = std::sqrt(s);
  }
  return growth_audit(mags);
}

}  // namespace fbl
