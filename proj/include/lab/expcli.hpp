#pragma once

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace lab {

inline constexpr const char* kToolVersion = "lab 1.0.0";

// ---- checks and reports ----

struct Check {
  std::string name;
  double measured = 0;
  std::string expected;  // human-readable target, e.g. "<= 1e-5" or "0.75 +- 0.02"
  double tolerance = 0;
  bool pass = false;
};

Check check_le(std::string name, double measured, double bound);
Check check_ge(std::string name, double measured, double bound);
Check check_near(std::string name, double measured, double target, double tol);
Check check_true(std::string name, bool ok, double measured = 0, std::string expected = "true");

struct Table {
  std::string schema;  // name.vN
  std::vector<std::string> columns;
  // Cells are numbers or strings.
  std::vector<std::vector<nlohmann::json>> rows;
};

struct RunReport {
  nlohmann::json config;
  std::vector<Check> checks;
  // Experiment results; must not depend on timing.
  nlohmann::json results = nlohmann::json::object();
  std::vector<std::pair<std::string, Table>> tables;  // path -> table
  std::vector<std::pair<std::string, nlohmann::json>> documents;  // path -> JSON output
  double wall_time = 0;
  // Per-part timings; written to the sidecar with wall_time.
  nlohmann::json timing = nlohmann::json::object();
  std::string version = kToolVersion;

  bool pass() const;
  // Deterministic part only: wall time is written separately.
  nlohmann::json to_json() const;
};

// CSV with a "# schema <name>" first line, header row, 17-significant-digit floats, '\n' endings.
std::string table_csv(const Table& t);
// Writes every table and document, then the report to `report_path` (if non-empty) with timings in
// `<report_path>.time.json`.
void emit_tables(const RunReport& report, const std::string& report_path);

// ---- experiment configuration ----

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json params;  // every parameter materialized
  std::string out;
  std::string report;     // run report path; "" derives one from `out`
};

// Validates kind and keys, fills defaults. ConfigError on anything unknown or ill-typed.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_text(const std::string& text);
nlohmann::json echo_config(const ExperimentConfig& c);
// Default parameters for an experiment kind.
nlohmann::json default_params(const std::string& experiment);
const std::vector<std::string>& experiment_kinds();

// Runs the experiment and writes its outputs. Domain errors become failed checks; ConfigError propagates.
RunReport run(const ExperimentConfig& config);
std::string report_path(const ExperimentConfig& config);

// 0 pass, 1 check failure, 2 configuration or I/O error.
int exit_code(const RunReport& report);

// ---- acceptance suite ----

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  nlohmann::json details = nlohmann::json::object();
  std::string error;  // domain error message, if the criterion aborted
  double seconds = 0;
  double budget_seconds = 0;

  bool checks_pass() const;
  bool within_budget() const { return seconds <= budget_seconds; }
  bool pass() const { return checks_pass() && within_budget(); }
};

int criterion_count();
// Runs one criterion (1-based) with the tolerances of the acceptance list.
CriterionResult run_criterion(int id);
// Progress callback receives each result as it finishes.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids,
                                            const std::function<void(const CriterionResult&)>& on_done = {});
// One line: "criterion N PASS|FAIL <title> (<seconds>s / budget <b>s)" followed by failing checks.
std::string format_criterion(const CriterionResult& r);

}  // namespace lab
