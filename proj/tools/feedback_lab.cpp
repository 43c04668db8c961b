// feedback-lab: command-line runner for the named experiments.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid input or output
// collision, 3 undecided solver verdict under --strict.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "feedback_lab/config.hpp"
#include "feedback_lab/experiments.hpp"
#include "feedback_lab/report_io.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seeds;
  std::optional<std::uint64_t> horizon;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> threads;
  std::optional<std::uint64_t> every;
  bool force = false;
  bool no_timestamp = false;
  bool strict = false;
  bool print_config = false;
};

void add_common(CLI::App& cmd, CommonFlags& f) {
  cmd.add_option("--config", f.config, "JSON experiment config; flags override its values");
  cmd.add_option("--out", f.out, "output directory (results are printed only when omitted)");
  cmd.add_option("--format", f.format, "result file format")->check(CLI::IsMember({"csv", "json"}));
  cmd.add_option("--seeds", f.seeds, "number of Monte Carlo episodes");
  cmd.add_option("--T", f.horizon, "episode horizon");
  cmd.add_option("--seed", f.seed, "master seed (overrides FEEDBACK_LAB_SEED)");
  cmd.add_option("--threads", f.threads, "worker threads (0 = all cores)");
  cmd.add_option("--every", f.every, "keep every k-th trajectory row");
  cmd.add_flag("--force", f.force, "overwrite existing output files");
  cmd.add_flag("--no-timestamp", f.no_timestamp, "omit the generation timestamp");
  cmd.add_flag("--strict", f.strict, "exit 3 when a solver cannot decide");
  cmd.add_flag("--print-config", f.print_config, "print the normalized config and exit");
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("FEEDBACK_LAB_SEED");
  if (!s || !*s) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != std::string(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw fbl::ConfigError(std::string("FEEDBACK_LAB_SEED is not an unsigned integer: ") + s);
  }
}

fbl::ExperimentConfig build_config(const std::string& experiment, const CommonFlags& f,
                                   const std::map<std::string, std::string>& param_flags) {
  fbl::Json doc = f.config.empty() ? fbl::Json::object() : fbl::read_json_file(f.config);
  if (!doc.is_object()) throw fbl::ConfigError("config must be a JSON object");
  if (!experiment.empty()) {
    if (doc.contains("experiment") && doc["experiment"] != experiment)
      throw fbl::ConfigError("config is for '" + doc["experiment"].dump() + "', not " + experiment);
    doc["experiment"] = experiment;
  }
  if (f.out) doc["out"] = *f.out;
  if (f.format) doc["format"] = *f.format;
  if (f.seeds) doc["seeds"] = *f.seeds;
  if (f.horizon) doc["T"] = *f.horizon;
  if (f.threads) doc["threads"] = *f.threads;
  if (f.every) doc["every"] = *f.every;
  if (f.seed)
    doc["seed"] = *f.seed;
  else if (auto s = env_seed())
    doc["seed"] = *s;
  if (!param_flags.empty()) {
    const auto& def = fbl::find_experiment(doc.value("experiment", ""));
    if (!doc.contains("params")) doc["params"] = fbl::Json::object();
    for (const auto& p : def.params)
      if (auto it = param_flags.find(p.name); it != param_flags.end())
        doc["params"][p.name] = fbl::param_from_text(p, it->second);
  }
  return fbl::parse_config(doc);
}

int execute(const fbl::ExperimentConfig& cfg, const CommonFlags& f) {
  if (f.print_config) {
    std::cout << fbl::serialize_config(cfg).dump(2) << '\n';
    return 0;
  }
  const auto result = fbl::run_experiment(cfg);
  std::cout << result.summary;

  if (!cfg.out.empty()) {
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    const auto stamp = f.no_timestamp ? std::string() : fbl::utc_timestamp();
    const auto main_path = dir / (cfg.experiment + "." + cfg.format);
    const auto traj_path = dir / (cfg.experiment + "_trajectory.csv");
    if (!f.force) {
      for (const auto& p : {main_path, traj_path})
        if ((p == main_path || result.trajectory) && std::filesystem::exists(p))
          throw fbl::PathCollision(p.string() + " already exists (use --force to overwrite)");
    }
    std::string body;
    if (cfg.format == "csv") {
      body = fbl::to_csv(result.table, stamp.empty() ? "" : "generated " + stamp);
    } else {
      fbl::Json doc;
      if (!stamp.empty()) doc["generated"] = stamp;
      doc["config"] = fbl::serialize_config(cfg);
      doc["config"].erase("out");  // keeps result files independent of where they were written
      doc["results"] = result.json;
      body = doc.dump(2) + "\n";
    }
    fbl::write_text_file(main_path, body, true);
    if (result.trajectory)
      fbl::write_text_file(traj_path, fbl::to_csv(*result.trajectory, stamp.empty() ? "" : "generated " + stamp),
                           true);
  }
  return f.strict && result.indeterminate ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedback capability laboratory: stabilizability oracles and closed-loop experiments"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::map<std::string, std::map<std::string, std::string>> param_flags;
  std::map<std::string, CLI::App*> commands;

  auto* run = app.add_subcommand("run", "Run the experiment named in --config");
  add_common(*run, flags);
  run->get_option("--config")->required();

  for (const auto& def : fbl::experiment_catalog()) {
    auto* cmd = app.add_subcommand(def.name, def.help);
    cmd->set_help_flag("--help", "Print this help message and exit");
    add_common(*cmd, flags);
    for (const auto& p : def.params) {
      auto* opt = cmd->add_option_function<std::string>(
          "--" + p.name, [&param_flags, exp = def.name, name = p.name](const std::string& v) {
            param_flags[exp][name] = v;
          },
          p.help);
      if (!p.default_value.is_null()) opt->default_str(p.default_value.dump());
    }
    commands[def.name] = cmd;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    fbl::ExperimentConfig cfg;
    if (run->parsed()) {
      cfg = build_config("", flags, {});
    } else {
      for (const auto& [name, cmd] : commands)
        if (cmd->parsed()) cfg = build_config(name, flags, param_flags[name]);
    }
    return execute(cfg, flags);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fbl::PathCollision& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
