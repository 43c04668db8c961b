#include "feedback_lab/report_io.hpp"

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

namespace fbl {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_number(std::size_t v) { return std::to_string(v); }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv(std::ostream& out, const Table& table, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << csv_field(cells[i]);
    }
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
}

std::string to_csv(const Table& table, const std::string& comment) {
  std::ostringstream os;
  write_csv(os, table, comment);
  return os.str();
}

Table trajectory_table(const Trajectory& traj, std::size_t every) {
  if (every == 0) throw std::invalid_argument("--every must be >= 1");
  Table t;
  t.header.push_back("t");
  auto names = [&t](const char* stem, std::size_t n) {
    if (n == 1) {
      t.header.emplace_back(stem);
      return;
    }
    for (std::size_t i = 0; i < n; ++i) t.header.push_back(std::string(stem) + std::to_string(i));
  };
  names("x", traj.state_dim);
  names("u", traj.input_dim);
  names("w", traj.state_dim);
  const bool modes = !traj.modes.empty();
  if (modes) t.header.emplace_back("mode");

  const auto steps = traj.steps();
  auto emit = [&](std::size_t k) {
    std::vector<std::string> row{format_number(k)};
    for (double v : traj.state(k)) row.push_back(format_number(v));
    // The last state has no input or noise yet.
    const bool has_next = k < steps;
    for (std::size_t i = 0; i < traj.input_dim; ++i) row.push_back(has_next ? format_number(traj.input(k)[i]) : "");
    for (std::size_t i = 0; i < traj.state_dim; ++i) row.push_back(has_next ? format_number(traj.noise(k)[i]) : "");
    if (modes) row.push_back(has_next ? format_number(traj.modes[k]) : "");
    t.rows.push_back(std::move(row));
  };
  for (std::size_t k = 0; k <= steps; k += every) emit(k);
  if (steps % every != 0) emit(steps);
  return t;
}

namespace {

// JSON has no NaN/inf; encode them as strings so round-trips stay exact.
Json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

double number_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    throw std::invalid_argument("not a number: " + s);
  }
  return j.get<double>();
}

Json vector_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number_json(x));
  return a;
}

std::vector<double> vector_from_json(const Json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number_from_json(x));
  return v;
}

}  // namespace

Json to_json(const McReport& r) {
  Json j;
  j["seeds"] = r.seeds;
  j["blowups"] = r.blowups;
  j["inconclusive"] = r.inconclusive;
  j["blowup_fraction"] = number_json(r.blowup_fraction);
  j["bounded"] = r.bounded;
  j["max_sup_abs_state"] = number_json(r.max_sup_abs_state);
  j["escapes"] = r.escapes;
  Json reg = Json::array();
  for (const auto& p : r.regret_vs_logT)
    reg.push_back(Json{{"T", p.horizon},
                       {"mean", number_json(p.mean)},
                       {"half_width", number_json(p.half_width)},
                       {"count", p.count}});
  j["regret_vs_logT"] = std::move(reg);
  j["mean_sq_curve"] = vector_json(r.mean_sq_curve);
  j["mean_sq_half_width"] = vector_json(r.mean_sq_half_width);
  return j;
}

McReport mc_report_from_json(const Json& j) {
  McReport r;
  r.seeds = j.at("seeds").get<std::size_t>();
  r.blowups = j.at("blowups").get<std::size_t>();
  r.inconclusive = j.at("inconclusive").get<std::size_t>();
  r.blowup_fraction = number_from_json(j.at("blowup_fraction"));
  r.bounded = j.at("bounded").get<std::size_t>();
  r.max_sup_abs_state = number_from_json(j.at("max_sup_abs_state"));
  r.escapes = j.at("escapes").get<std::size_t>();
  for (const auto& p : j.at("regret_vs_logT"))
    r.regret_vs_logT.push_back({p.at("T").get<std::size_t>(), number_from_json(p.at("mean")),
                                number_from_json(p.at("half_width")), p.at("count").get<std::size_t>()});
  r.mean_sq_curve = vector_from_json(j.at("mean_sq_curve"));
  r.mean_sq_half_width = vector_from_json(j.at("mean_sq_half_width"));
  return r;
}

void write_text_file(const std::filesystem::path& path, const std::string& content, bool force) {
  if (!force && std::filesystem::exists(path))
    throw PathCollision(path.string() + " already exists (use --force to overwrite)");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": " + std::strerror(errno));
  out << content;
  out.close();
  if (!out) throw std::runtime_error(path.string() + ": " + std::strerror(errno));
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace fbl
