#pragma once

// The named experiments behind the command-line tool.

#include <filesystem>
#include <optional>
#include <string>

#include "feedback_lab/config.hpp"
#include "feedback_lab/models.hpp"
#include "feedback_lab/report_io.hpp"

namespace fbl {

struct ExperimentResult {
  Table table;
  Json json;
  /// Human-readable lines for stdout.
  std::string summary;
  /// A solver could not decide (used for --strict).
  bool indeterminate = false;
  std::optional<Table> trajectory;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// {"P": [[...]], "A": [M_1, ...], "B": [M_1, ...], "sigma_lo": s, "sigma_hi": S}
/// where each M_i is a matrix (array of rows) or a number for 1x1.
/// sigma_lo defaults to 1 and sigma_hi to dim * sigma_lo.
MjlsSpec mjls_spec_from_json(const Json& j);
MjlsSpec load_mjls_spec(const std::filesystem::path& path);

/// Checkpoint exponent window used for regret slopes at horizon T: up to
/// [7, 13], shifted down so at least five checkpoints fit. nullopt if T < 16.
std::optional<std::pair<int, int>> regret_fit_window(std::size_t horizon);

}  // namespace fbl
