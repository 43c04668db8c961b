#include "feedback_lab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "feedback_lab/models.hpp"

namespace fbl {

namespace {

ParamDef num(std::string name, Json def, std::string help) {
  return {std::move(name), ParamKind::Number, std::move(def), std::move(help), {}, false};
}
ParamDef integer(std::string name, Json def, std::string help) {
  return {std::move(name), ParamKind::Integer, std::move(def), std::move(help), {}, false};
}
ParamDef list(std::string name, Json def, std::string help) {
  return {std::move(name), ParamKind::NumberList, std::move(def), std::move(help), {}, false};
}
ParamDef choice(std::string name, std::string def, std::vector<std::string> choices, std::string help) {
  return {std::move(name), ParamKind::Choice, Json(std::move(def)), std::move(help), std::move(choices), false};
}
ParamDef flag(std::string name, bool def, std::string help) {
  return {std::move(name), ParamKind::Bool, Json(def), std::move(help), {}, false};
}
ParamDef path(std::string name, std::string help) {
  return {std::move(name), ParamKind::Path, Json(nullptr), std::move(help), {}, true};
}

std::vector<ExperimentDef> build_catalog() {
  std::vector<ExperimentDef> c;
  c.push_back({"parametric-sweep",
               "Adaptive minimum-variance control of y' = theta*f(y) + u + w with |f(y)| ~ M|y|^b. "
               "Stabilization holds for b < 4 (with O(log T) regret) and fails with positive probability for b >= 4.",
               100,
               5000,
               {list("b", Json::array({1.5, 2.0, 2.5, 3.0, 3.5, 4.5, 5.0, 6.0}), "growth exponents"),
                num("gain", 1.0, "asymptotic gain M"),
                num("theta_mean", 0.0, "prior mean of theta"),
                num("theta_sd", 1.0, "prior standard deviation of theta"),
                num("noise_variance", 1.0, "variance of the Gaussian noise")}});
  c.push_back({"poly-check",
               "Impossibility test for y' = sum theta_i y^{b_i} + u + w: no feedback stabilizes when the "
               "characteristic polynomial goes negative on (1, b_1).",
               1,
               1,
               {list("exponents", Json::array({5.0}), "strictly decreasing positive exponents b_1 > ... > b_p")}});
  c.push_back({"nonparam-duel",
               "Nearest-neighbour switching control against an unknown f in F(L). "
               "Feedback copes with every such f iff L < 3/2 + sqrt(2).",
               100,
               10000,
               {num("L", 2.0, "quasi-norm radius"),
                num("w_bar", 1.0, "noise bound"),
                choice("source", "random", {"random", "adversary"}, "random class members or the greedy adversary"),
                num("eps", nullptr, "switching threshold (default 0.1*w_bar)"),
                num("budget_c", nullptr, "clip for unbounded feasible intervals (default 10*w_bar)"),
                integer("anchors", 20, "anchors of each random member"),
                num("range", 50.0, "anchor positions drawn from [-range, range]"),
                num("y0_range", 10.0, "initial state drawn from [-y0_range, y0_range]"),
                num("threshold", 1e6, "escape level reported as exceed_fraction"),
                flag("trajectory", false, "also write the first episode's trajectory")}});
  c.push_back({"highorder-check",
               "Impossibility test for p-th order Lipschitz uncertainty: L + 1/2 >= (1 + 1/p)(pL)^{1/(p+1)} "
               "rules out stabilizing feedback. For p = 1 the threshold is 3/2 + sqrt(2).",
               1,
               1,
               {list("L", Json::array({2.0, 3.0}), "Lipschitz constants"), integer("order", 1, "order p")}});
  c.push_back({"sampled-sweep",
               "Sampled-data control of x' = f(x) + u with |f(x)| <= L|x| + c under zero-order hold. "
               "Stabilizable when Lh < ln 4, impossible when Lh > 7.53.",
               50,
               1000,
               {num("L", 1.0, "Lipschitz constant"),
                num("c", 1.0, "growth offset"),
                list("h", Json::array({0.5, 1.0, 1.5, 2.0, 4.0, 8.0}), "sampling periods"),
                choice("source", "random", {"random", "adversary"}, "random class members or the greedy adversary"),
                choice("controller", "sampled", {"sampled", "zero"}, "nearest-neighbour law or u = 0"),
                num("kappa", 4.0, "input clip factor"),
                integer("anchors", 30, "anchors of each random member"),
                num("range", 20.0, "anchor positions drawn from [-range, range]"),
                num("x0", 0.0, "initial state"),
                num("x0_range", nullptr, "when set, x0 drawn from [-x0_range, x0_range]")}});
  c.push_back({"mjls-solve",
               "Coupled Riccati equations of a Markov jump linear system with hidden mode. "
               "A positive definite solution exists iff the system is stabilizable.",
               1,
               1,
               {path("spec", "MJLS description (JSON with P, A, B, sigma_lo, sigma_hi)"),
                num("tol", 1e-10, "convergence tolerance"),
                integer("max_iter", 10000, "iteration cap")}});
  c.push_back({"mjls-run",
               "Monte Carlo of a Markov jump linear system under certainty-equivalence mode estimation "
               "with Riccati gains.",
               100,
               1000,
               {path("spec", "MJLS description (JSON with P, A, B, sigma_lo, sigma_hi)"),
                list("x0", nullptr, "initial state (default zeros)"),
                integer("initial_mode", 0, "initial mode (0-based)"),
                choice("controller", "mjls", {"mjls", "zero"}, "Riccati law or u = 0"),
                flag("trajectory", false, "also write the first episode's trajectory")}});
  return c;
}

const std::set<std::string> kTopKeys{"experiment", "seed", "seeds", "T", "threads", "out", "format", "every", "params"};

double parse_double(std::string_view s) {
  double v = 0.0;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("not a number: '" + std::string(s) + "'");
  return v;
}

std::uint64_t get_unsigned(const Json& j, const char* key) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  throw ConfigError(std::string(key) + " must be a nonnegative integer");
}

}  // namespace

const std::vector<ExperimentDef>& experiment_catalog() {
  static const auto catalog = build_catalog();
  return catalog;
}

const ExperimentDef& find_experiment(std::string_view name) {
  for (const auto& e : experiment_catalog())
    if (e.name == name) return e;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::vector<double> expand_range(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (parts.size() != 3) throw ConfigError("range must be start:stop:step");
  const double a = parse_double(parts[0]);
  const double b = parse_double(parts[1]);
  const double step = parse_double(parts[2]);
  if (!(step > 0.0) || !(b >= a)) throw ConfigError("range needs stop >= start and step > 0");
  std::vector<double> out;
  // Generated as a + k*step so values do not accumulate rounding error.
  const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) out.push_back(a + static_cast<double>(k) * step);
  return out;
}

Json normalize_param(const ParamDef& def, const Json& raw) {
  const auto fail = [&def](const std::string& why) { return ConfigError("parameter '" + def.name + "': " + why); };
  if (raw.is_null()) {
    if (def.required) throw fail("required");
    return nullptr;
  }
  switch (def.kind) {
    case ParamKind::Number:
      if (!raw.is_number()) throw fail("expected a number");
      return raw.get<double>();
    case ParamKind::Integer:
      if (!raw.is_number_integer() && !(raw.is_number_float() && raw.get<double>() == std::floor(raw.get<double>())))
        throw fail("expected an integer");
      if (raw.get<double>() < 0) throw fail("expected a nonnegative integer");
      return static_cast<std::uint64_t>(raw.get<double>());
    case ParamKind::NumberList: {
      Json out = Json::array();
      if (raw.is_number()) {
        out.push_back(raw.get<double>());
      } else if (raw.is_array()) {
        for (const auto& v : raw) {
          if (!v.is_number()) throw fail("list entries must be numbers");
          out.push_back(v.get<double>());
        }
      } else if (raw.is_string()) {
        const auto s = raw.get<std::string>();
        if (s.find(':') != std::string::npos) {
          for (double v : expand_range(s)) out.push_back(v);
        } else {
          std::stringstream ss(s);
          std::string item;
          while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
        }
      } else {
        throw fail("expected a number, list or range");
      }
      if (out.empty()) throw fail("empty list");
      return out;
    }
    case ParamKind::Choice: {
      if (!raw.is_string()) throw fail("expected a string");
      const auto s = raw.get<std::string>();
      for (const auto& c : def.choices)
        if (c == s) return s;
      std::string all;
      for (const auto& c : def.choices) all += (all.empty() ? "" : "|") + c;
      throw fail("expected one of " + all);
    }
    case ParamKind::Bool:
      if (!raw.is_boolean()) throw fail("expected true or false");
      return raw.get<bool>();
    case ParamKind::Path:
      if (!raw.is_string() || raw.get<std::string>().empty()) throw fail("expected a path");
      return raw.get<std::string>();
  }
  throw fail("unsupported kind");
}

Json param_from_text(const ParamDef& def, const std::string& text) {
  if (def.kind == ParamKind::Choice || def.kind == ParamKind::Path) return normalize_param(def, Json(text));
  if (def.kind == ParamKind::NumberList && text.find_first_of(":,") != std::string::npos)
    return normalize_param(def, Json(text));
  Json parsed = Json::parse(text, nullptr, false);
  if (parsed.is_discarded()) throw ConfigError("parameter '" + def.name + "': cannot parse '" + text + "'");
  return normalize_param(def, parsed);
}

ExperimentConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : doc.items())
    if (!kTopKeys.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  if (!doc.contains("experiment") || !doc["experiment"].is_string()) throw ConfigError("config needs an experiment");
  const auto& def = find_experiment(doc["experiment"].get<std::string>());

  ExperimentConfig cfg;
  cfg.experiment = def.name;
  cfg.seeds = def.default_seeds;
  cfg.horizon = def.default_horizon;
  if (doc.contains("seed")) cfg.seed = get_unsigned(doc["seed"], "seed");
  if (doc.contains("seeds")) cfg.seeds = get_unsigned(doc["seeds"], "seeds");
  if (doc.contains("T")) cfg.horizon = get_unsigned(doc["T"], "T");
  if (doc.contains("threads")) cfg.threads = get_unsigned(doc["threads"], "threads");
  if (doc.contains("every")) cfg.every = get_unsigned(doc["every"], "every");
  if (doc.contains("out")) {
    if (!doc["out"].is_string()) throw ConfigError("out must be a path");
    cfg.out = doc["out"].get<std::string>();
  }
  if (doc.contains("format")) {
    if (!doc["format"].is_string()) throw ConfigError("format must be csv or json");
    cfg.format = doc["format"].get<std::string>();
  }
  if (cfg.format != "csv" && cfg.format != "json") throw ConfigError("format must be csv or json");
  if (cfg.seeds < 1) throw ConfigError("seeds must be >= 1");
  if (cfg.horizon < 1) throw ConfigError("T must be >= 1");
  if (cfg.every < 1) throw ConfigError("every must be >= 1");

  const Json params = doc.contains("params") ? doc["params"] : Json::object();
  if (!params.is_object()) throw ConfigError("params must be an object");
  for (const auto& [k, v] : params.items()) {
    bool known = false;
    for (const auto& p : def.params) known = known || p.name == k;
    if (!known) throw ConfigError("unknown parameter '" + k + "' for " + def.name);
  }
  for (const auto& p : def.params)
    cfg.params[p.name] = normalize_param(p, params.contains(p.name) ? params[p.name] : p.default_value);
  return cfg;
}

Json serialize_config(const ExperimentConfig& cfg) {
  Json j;
  j["experiment"] = cfg.experiment;
  j["seed"] = cfg.seed;
  j["seeds"] = cfg.seeds;
  j["T"] = cfg.horizon;
  j["threads"] = cfg.threads;
  j["out"] = cfg.out;
  j["format"] = cfg.format;
  j["every"] = cfg.every;
  j["params"] = cfg.params;
  return j;
}

Json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

}  // namespace fbl
