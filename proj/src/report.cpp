#include "lab/errors.hpp"
#include "lab/expcli.hpp"
#include "lab/numeric.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace lab {

namespace {

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Keeps reports valid JSON: non-finite values become strings.
nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string cell(const nlohmann::json& v) {
  if (v.is_number_float()) return fmt17(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return v.dump();
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  f << text;
  if (!f) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace

Check check_le(std::string name, double measured, double bound) {
  return {std::move(name), measured, "<= " + g6(bound), bound, measured <= bound};
}

Check check_ge(std::string name, double measured, double bound) {
  return {std::move(name), measured, ">= " + g6(bound), bound, measured >= bound};
}

Check check_near(std::string name, double measured, double target, double tol) {
  return {std::move(name), measured, g6(target) + " +- " + g6(tol), tol, std::abs(measured - target) <= tol};
}

Check check_true(std::string name, bool ok, double measured, std::string expected) {
  return {std::move(name), measured, std::move(expected), 0, ok};
}

bool RunReport::pass() const {
  for (const Check& c : checks)
    if (!c.pass) return false;
  return true;
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["tool_version"] = version;
  j["config"] = config;
  nlohmann::json cs = nlohmann::json::array();
  for (const Check& c : checks)
    cs.push_back({{"name", c.name},
                  {"measured", num(c.measured)},
                  {"expected", c.expected},
                  {"tolerance", num(c.tolerance)},
                  {"pass", c.pass}});
  j["checks"] = cs;
  j["pass"] = pass();
  j["results"] = results;
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& [path, t] : tables) outs.push_back({{"path", path}, {"schema", t.schema}});
  j["tables"] = outs;
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : documents) docs.push_back(d.first);
  j["documents"] = docs;
  return j;
}

std::string table_csv(const Table& t) {
  std::string s = "# schema " + t.schema + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
  s += "\n";
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) fail(ErrorCode::IoError, "row width mismatch in table " + t.schema);
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + cell(row[i]);
    s += "\n";
  }
  return s;
}

void emit_tables(const RunReport& report, const std::string& path) {
  for (const auto& [p, t] : report.tables) write_file(p, table_csv(t));
  for (const auto& [p, d] : report.documents) write_file(p, d.dump(2) + "\n");
  if (path.empty()) return;
  write_file(path, report.to_json().dump(2) + "\n");
  nlohmann::json timing = {
      {"wall_time_seconds", report.wall_time}, {"tool_version", report.version}, {"parts", report.timing}};
  write_file(path + ".time.json", timing.dump(2) + "\n");
}

int exit_code(const RunReport& report) { return report.pass() ? 0 : 1; }

}  // namespace lab
