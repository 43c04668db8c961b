#pragma once

// Tabular and JSON emission of experiment results.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "feedback_lab/sim.hpp"

namespace fbl {

using Json = nlohmann::ordered_json;

/// Raised when an output file exists and overwriting was not requested.
class PathCollision : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Shortest decimal that round-trips; "nan", "inf", "-inf" for non-finite.
std::string format_number(double v);
std::string format_number(std::size_t v);

/// RFC 4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(std::string_view s);

/// Header row then one line per row, CRLF-free ("\n" endings). A non-empty
/// `comment` is written first as "# <comment>".
void write_csv(std::ostream& out, const Table& table, const std::string& comment = {});
std::string to_csv(const Table& table, const std::string& comment = {});

/// Rows t, state..., input..., noise..., [mode] for steps 0, every, 2*every, ...
/// The final state row is always included.
Table trajectory_table(const Trajectory& traj, std::size_t every = 1);

Json to_json(const McReport& report);
McReport mc_report_from_json(const Json& j);

/// Writes `content` to `path`. Throws PathCollision if the file exists and
/// !force, std::runtime_error carrying the OS message on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& content, bool force);

/// UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

}  // namespace fbl
