#include "feedback_lab/experiments.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "feedback_lab/analysis.hpp"
#include "feedback_lab/riccati.hpp"
#include "feedback_lab/sim.hpp"

namespace fbl {

namespace {

std::vector<double> numbers(const Json& j) { return j.get<std::vector<double>>(); }

std::optional<double> optional_number(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Json optional_json(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

McConfig mc_base(const ExperimentConfig& cfg) {
  McConfig mc;
  mc.horizon = cfg.horizon;
  mc.seeds = cfg.seeds;
  mc.master_seed = cfg.seed;
  mc.threads = cfg.threads;
  mc.mean_sq_curve = false;
  return mc;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a number or a non-empty array of rows");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError("matrix rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError("matrix entries must be numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// "2.5" for 1x1, otherwise "[a b; c d]".
std::string matrix_text(const Eigen::MatrixXd& m) {
  if (m.size() == 1) return format_number(m(0, 0));
  std::string s = "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) s += "; ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) s += ' ';
      s += format_number(m(r, c));
    }
  }
  return s + "]";
}

ExperimentResult parametric_sweep(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  ExperimentResult res;
  res.table.header = {"b", "blowup_fraction", "mean_regret_slope"};
  res.json = Json::array();
  const auto window = regret_fit_window(cfg.horizon);
  std::ostringstream out;
  for (double b : numbers(p["b"])) {
    McConfig mc = mc_base(cfg);
    ParametricSystem sys;
    sys.f = PowerGrowthFn(p["gain"].get<double>(), b);
    sys.theta_mean = p["theta_mean"].get<double>();
    sys.theta_sd = p["theta_sd"].get<double>();
    sys.noise_variance = p["noise_variance"].get<double>();
    mc.system = sys;
    mc.controller = MvRlsLaw{};
    const auto report = monte_carlo(mc);
    std::optional<LogFit> fit;
    if (window && report.bounded > 0) fit = regret_logfit(report, window->first, window->second);
    const double slope = fit ? fit->slope : std::nan("");
    res.table.rows.push_back({format_number(b), format_number(report.blowup_fraction), format_number(slope)});
    res.json.push_back(Json{{"b", b},
                            {"regime", to_string(parametric_regime(b).regime)},
                            {"blowup_fraction", report.blowup_fraction},
                            {"blowups", report.blowups},
                            {"inconclusive", report.inconclusive},
                            {"seeds", report.seeds},
                            {"mean_regret_slope", optional_json(fit ? std::optional(fit->slope) : std::nullopt)},
                            {"regret_r2", optional_json(fit ? std::optional(fit->r2) : std::nullopt)}});
    out << "b=" << short_number(b) << "  blowup_fraction=" << short_number(report.blowup_fraction)
        << "  mean_regret_slope=" << short_number(slope) << '\n';
  }
  res.summary = out.str();
  return res;
}

ExperimentResult poly_check(const ExperimentConfig& cfg) {
  const auto exps = numbers(cfg.params["exponents"]);
  const auto poly = characteristic_poly(exps);
  const auto verdict = poly_impossible(poly, exps.front());
  ExperimentResult res;
  res.table.header = {"exponents", "verdict", "boundary", "witness", "value"};
  std::string joined;
  for (double e : exps) joined += (joined.empty() ? "" : " ") + format_number(e);
  const auto wit = verdict.witness.value_or(std::nan(""));
  const auto val = verdict.value.value_or(std::nan(""));
  res.table.rows.push_back({joined, to_string(verdict.regime), verdict.boundary ? "true" : "false",
                            format_number(wit), format_number(val)});
  Json coeffs = Json::array();
  for (double c : poly.coeffs()) coeffs.push_back(c);
  res.json = Json{{"exponents", exps},
                  {"coefficients", coeffs},
                  {"verdict", to_string(verdict.regime)},
                  {"boundary", verdict.boundary},
                  {"witness", optional_json(verdict.witness)},
                  {"value", optional_json(verdict.value)}};
  std::ostringstream out;
  out << to_string(verdict.regime);
  if (verdict.regime == Regime::Impossible)
    out << ", witness z≈" << short_number(wit) << ", P(z)=" << short_number(val);
  else if (verdict.witness)
    out << ", min P(z)=" << short_number(val) << " at z≈" << short_number(wit);
  if (verdict.boundary) out << " (boundary)";
  out << '\n';
  res.summary = out.str();
  return res;
}

ExperimentResult nonparam_duel(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  NonparametricSystem sys;
  sys.lipschitz = p["L"].get<double>();
  sys.w_bar = p["w_bar"].get<double>();
  sys.source = p["source"] == "adversary" ? FnSource::Adversary : FnSource::Random;
  sys.budget_c = optional_number(p["budget_c"]);
  sys.random_anchors = p["anchors"].get<std::size_t>();
  sys.random_range = p["range"].get<double>();
  sys.y0_range = p["y0_range"].get<double>();
  const ControllerSpec law = SwitchingLaw{optional_number(p["eps"])};
  McConfig mc = mc_base(cfg);
  mc.system = sys;
  mc.controller = law;
  mc.escape_level = p["threshold"].get<double>();
  const auto report = monte_carlo(mc);
  const double escape_fraction = static_cast<double>(report.escapes) / static_cast<double>(report.seeds);

  ExperimentResult res;
  res.table.header = {"L", "source", "seeds", "blowup_fraction", "exceed_fraction", "max_sup_abs_state"};
  res.table.rows.push_back({format_number(sys.lipschitz), p["source"].get<std::string>(), format_number(report.seeds),
                            format_number(report.blowup_fraction), format_number(escape_fraction),
                            format_number(report.max_sup_abs_state)});
  res.json = Json{{"L", sys.lipschitz},
                  {"critical_radius", critical_radius()},
                  {"source", p["source"]},
                  {"exceed_fraction", escape_fraction},
                  {"report", to_json(report)}};
  std::ostringstream out;
  out << "L=" << short_number(sys.lipschitz) << " (critical radius " << short_number(critical_radius()) << ")  "
      << p["source"].get<std::string>() << ": blowup_fraction=" << short_number(report.blowup_fraction)
      << "  exceed_fraction=" << short_number(escape_fraction)
      << "  max_sup=" << short_number(report.max_sup_abs_state) << '\n';
  res.summary = out.str();
  if (p["trajectory"].get<bool>())
    res.trajectory = trajectory_table(run_episode(sys, law, cfg.horizon, episode_seed(cfg.seed, 0)).trajectory,
                                      cfg.every);
  return res;
}

ExperimentResult highorder_check(const ExperimentConfig& cfg) {
  const auto order = cfg.params["order"].get<std::size_t>();
  ExperimentResult res;
  res.table.header = {"L", "order", "verdict", "boundary", "margin"};
  res.json = Json::array();
  std::ostringstream out;
  for (double l : numbers(cfg.params["L"])) {
    const auto v = highorder_impossible(l, order);
    const double margin = v.value.value_or(std::nan(""));
    res.table.rows.push_back({format_number(l), format_number(order), to_string(v.regime),
                              v.boundary ? "true" : "false", format_number(margin)});
    res.json.push_back(Json{{"L", l},
                            {"order", order},
                            {"verdict", to_string(v.regime)},
                            {"boundary", v.boundary},
                            {"margin", optional_json(v.value)}});
    out << "L=" << short_number(l) << " p=" << order << ": " << to_string(v.regime) << '\n';
  }
  res.summary = out.str();
  return res;
}

ExperimentResult sampled_sweep(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const double l = p["L"].get<double>();
  const double c = p["c"].get<double>();
  ExperimentResult res;
  res.table.header = {"L", "c", "h", "Lh", "regime", "boundary", "seeds", "blowup_fraction", "max_sup_abs_state"};
  res.json = Json::array();
  std::ostringstream out;
  for (double h : numbers(p["h"])) {
    SampledSystem sys;
    sys.spec = SampledSpec(l, c, h);
    sys.source = p["source"] == "adversary" ? FnSource::Adversary : FnSource::Random;
    sys.random_anchors = p["anchors"].get<std::size_t>();
    sys.random_range = p["range"].get<double>();
    sys.x0 = p["x0"].get<double>();
    sys.x0_range = optional_number(p["x0_range"]);
    McConfig mc = mc_base(cfg);
    mc.system = sys;
    if (p["controller"] == "zero")
      mc.controller = ZeroLaw{};
    else
      mc.controller = SampledLaw{p["kappa"].get<double>()};
    const auto report = monte_carlo(mc);
    const auto regime = sampled_regime(l, h);
    res.table.rows.push_back({format_number(l), format_number(c), format_number(h), format_number(l * h),
                              to_string(regime.regime), regime.boundary ? "true" : "false",
                              format_number(report.seeds), format_number(report.blowup_fraction),
                              format_number(report.max_sup_abs_state)});
    res.json.push_back(Json{{"L", l},
                            {"c", c},
                            {"h", h},
                            {"Lh", l * h},
                            {"regime", to_string(regime.regime)},
                            {"boundary", regime.boundary},
                            {"report", to_json(report)}});
    out << "h=" << short_number(h) << " Lh=" << short_number(l * h) << " " << to_string(regime.regime)
        << ": blowup_fraction=" << short_number(report.blowup_fraction)
        << "  max_sup=" << short_number(report.max_sup_abs_state) << '\n';
  }
  res.summary = out.str();
  return res;
}

ExperimentResult mjls_solve(const ExperimentConfig& cfg) {
  const auto spec = load_mjls_spec(cfg.params["spec"].get<std::string>());
  RiccatiOptions opts;
  opts.tol = cfg.params["tol"].get<double>();
  opts.max_iter = cfg.params["max_iter"].get<std::size_t>();
  const auto outcome = solve_coupled_riccati(spec, opts);
  ExperimentResult res;
  res.indeterminate = outcome.status == RiccatiStatus::Indeterminate;
  res.table.header = {"mode", "verdict", "iterations", "residual", "M", "K"};
  const double residual = outcome.solution ? outcome.solution->residual : std::nan("");
  std::ostringstream out;
  out << "verdict: " << to_string(outcome.status) << '\n' << "iterations: " << outcome.iterations << '\n';
  Json ms = Json::array(), ks = Json::array();
  for (std::size_t i = 0; i < spec.modes(); ++i) {
    std::string m, k;
    if (outcome.solution) {
      const auto& sol = *outcome.solution;
      m = matrix_text(sol.m[i]);
      k = matrix_text(sol.gains[i]);
      ms.push_back(matrix_json(sol.m[i]));
      ks.push_back(matrix_json(sol.gains[i]));
      out << "M_" << i << " = " << m << '\n' << "K_" << i << " = " << k << '\n';
    }
    res.table.rows.push_back({format_number(i), to_string(outcome.status), format_number(outcome.iterations),
                              format_number(residual), m, k});
  }
  if (outcome.solution) out << "residual: " << short_number(residual) << '\n';
  res.json = Json{{"verdict", to_string(outcome.status)},
                  {"iterations", outcome.iterations},
                  {"last_norm", outcome.last_norm},
                  {"residual", outcome.solution ? Json(residual) : Json(nullptr)},
                  {"M", ms},
                  {"K", ks}};
  res.summary = out.str();
  return res;
}

ExperimentResult mjls_run(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  MjlsSystem sys{load_mjls_spec(p["spec"].get<std::string>()), {}, p["initial_mode"].get<std::size_t>()};
  const auto n = static_cast<Eigen::Index>(sys.spec.state_dim());
  sys.x0 = Eigen::VectorXd::Zero(n);
  if (!p["x0"].is_null()) {
    const auto x0 = numbers(p["x0"]);
    if (static_cast<Eigen::Index>(x0.size()) != n) throw ConfigError("x0 has the wrong dimension");
    sys.x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), n);
  }
  ControllerSpec law = ZeroLaw{};
  ExperimentResult res;
  if (p["controller"] == "mjls") {
    const auto outcome = solve_coupled_riccati(sys.spec);
    if (outcome.status != RiccatiStatus::Converged)
      throw std::runtime_error(std::string("coupled Riccati solver: ") + to_string(outcome.status) +
                               ", no stabilizing gains");
    law = MjlsLaw{outcome.solution->gains};
  }
  McConfig mc = mc_base(cfg);
  mc.system = sys;
  mc.controller = law;
  mc.mean_sq_curve = true;
  const auto report = monte_carlo(mc);
  res.table.header = {"t", "mean_sq", "half_width"};
  for (std::size_t t = 0; t < report.mean_sq_curve.size(); ++t)
    if (t % cfg.every == 0 || t + 1 == report.mean_sq_curve.size())
      res.table.rows.push_back(
          {format_number(t), format_number(report.mean_sq_curve[t]), format_number(report.mean_sq_half_width[t])});
  res.json = to_json(report);
  std::ostringstream out;
  out << "seeds=" << report.seeds << "  blowup_fraction=" << short_number(report.blowup_fraction)
      << "  bounded=" << report.bounded << "  max_sup=" << short_number(report.max_sup_abs_state) << '\n';
  if (!report.mean_sq_curve.empty())
    out << "mean |x_T|^2=" << short_number(report.mean_sq_curve.back()) << '\n';
  res.summary = out.str();
  if (p["trajectory"].get<bool>())
    res.trajectory = trajectory_table(run_episode(sys, law, cfg.horizon, episode_seed(cfg.seed, 0)).trajectory,
                                      cfg.every);
  return res;
}

}  // namespace

std::optional<std::pair<int, int>> regret_fit_window(std::size_t horizon) {
  if (horizon < 16) return std::nullopt;
  const int top = std::min(13, static_cast<int>(std::bit_width(horizon)) - 1);
  return std::pair{std::min(7, top - 4), top};
}

MjlsSpec mjls_spec_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("MJLS spec must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (k != "P" && k != "A" && k != "B" && k != "sigma_lo" && k != "sigma_hi")
      throw ConfigError("unknown MJLS spec key '" + k + "'");
  if (!j.contains("P") || !j.contains("A") || !j.contains("B")) throw ConfigError("MJLS spec needs P, A and B");
  std::vector<Eigen::MatrixXd> a, b;
  for (const auto& m : j["A"]) a.push_back(matrix_from_json(m));
  for (const auto& m : j["B"]) b.push_back(matrix_from_json(m));
  if (a.empty()) throw ConfigError("MJLS spec needs at least one mode");
  MartingaleDiffVector noise;
  noise.dim = static_cast<std::size_t>(a.front().rows());
  noise.sigma_lo = j.value("sigma_lo", 1.0);
  noise.sigma_hi = j.value("sigma_hi", static_cast<double>(noise.dim) * noise.sigma_lo);
  return MjlsSpec(MarkovChain(matrix_from_json(j["P"])), std::move(a), std::move(b), noise);
}

MjlsSpec load_mjls_spec(const std::filesystem::path& path) { return mjls_spec_from_json(read_json_file(path)); }

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto& name = cfg.experiment;
  if (name == "parametric-sweep") return parametric_sweep(cfg);
  if (name == "poly-check") return poly_check(cfg);
  if (name == "nonparam-duel") return nonparam_duel(cfg);
  if (name == "highorder-check") return highorder_check(cfg);
  if (name == "sampled-sweep") return sampled_sweep(cfg);
  if (name == "mjls-solve") return mjls_solve(cfg);
  if (name == "mjls-run") return mjls_run(cfg);
  throw ConfigError("unknown experiment '" + name + "'");
}

}  // namespace fbl
