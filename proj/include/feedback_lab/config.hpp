#pragma once

// Experiment configuration: a JSON document validated against a per-experiment
// parameter catalog. Parsing fills defaults and normalizes values, so
// serialize(parse(x)) is a fixed point of parse.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "feedback_lab/report_io.hpp"

namespace fbl {

enum class ParamKind { Number, Integer, NumberList, Choice, Bool, Path };

struct ParamDef {
  std::string name;
  ParamKind kind;
  /// null means "derived automatically" (or required, for Path).
  Json default_value;
  std::string help;
  std::vector<std::string> choices;
  bool required = false;
};

struct ExperimentDef {
  std::string name;
  std::string help;
  std::size_t default_seeds;
  std::size_t default_horizon;
  std::vector<ParamDef> params;
};

const std::vector<ExperimentDef>& experiment_catalog();
/// Throws ConfigError for unknown names.
const ExperimentDef& find_experiment(std::string_view name);

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::size_t seeds = 0;
  std::size_t horizon = 0;
  std::size_t threads = 0;
  /// Output directory; empty prints to stdout only.
  std::string out;
  std::string format = "csv";
  std::size_t every = 1;
  /// Every catalog key present, values normalized.
  Json params = Json::object();

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Top-level keys: experiment, seed, seeds, T, threads, out, format, every,
/// params. Unknown keys anywhere raise ConfigError.
ExperimentConfig parse_config(const Json& doc);
Json serialize_config(const ExperimentConfig& cfg);
Json read_json_file(const std::filesystem::path& path);

/// Normalizes one parameter value. NumberList accepts a number, an array, a
/// comma list "a,b,c" or an inclusive range "start:stop:step".
Json normalize_param(const ParamDef& def, const Json& raw);
/// Interprets command-line text for a parameter (JSON literal or bare string).
Json param_from_text(const ParamDef& def, const std::string& text);

std::vector<double> expand_range(std::string_view text);

}  // namespace fbl
