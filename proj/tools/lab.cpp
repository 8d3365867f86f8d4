#include "lab/errors.hpp"
#include "lab/expcli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using Json = nlohmann::json;

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) lab::fail(lab::ErrorCode::IoError, "cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Flag text -> JSON: literal JSON, a bare comma list of numbers, a JSON file, or a plain string.
Json flag_value(const std::string& key, const std::string& text) {
  if ((key == "manifold" || key == "sigma" || key == "profile") && std::filesystem::is_regular_file(text)) {
    try {
      return Json::parse(read_text(text));
    } catch (const Json::parse_error& e) {
      lab::fail(lab::ErrorCode::ConfigError, "malformed JSON in " + text + ": " + e.what());
    }
  }
  for (const std::string& candidate : {text, "[" + text + "]"}) {
    try {
      return Json::parse(candidate);
    } catch (const Json::parse_error&) {
    }
  }
  return text;
}

struct Command {
  std::string experiment;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;  // config key -> flag text
  std::string out, report;
};

void add_flags(Command& c) {
  const Json defaults = lab::default_params(c.experiment);
  for (const auto& [key, def] : defaults.items()) {
    std::string flag = key;
    for (char& ch : flag)
      if (ch == '_') ch = '-';
    c.app->add_option("--" + flag, c.values[key], "default: " + def.dump());
  }
  c.app->add_option("--out", c.out, "primary output file");
  c.app->add_option("--report", c.report, "run report path (default derived from --out)");
}

Json to_config(const Command& c) {
  Json j = {{"experiment", c.experiment}};
  for (const auto& [key, text] : c.values)
    if (!text.empty()) j[key] = flag_value(key, text);
  if (!c.out.empty()) j["out"] = c.out;
  if (!c.report.empty()) j["report"] = c.report;
  return j;
}

void print(const lab::RunReport& r) {
  for (const lab::Check& ch : r.checks)
    std::printf("%s  %s: measured %.6g, expected %s\n", ch.pass ? "ok  " : "FAIL", ch.name.c_str(), ch.measured,
                ch.expected.c_str());
  std::printf("%s (%.2fs)\n", r.pass() ? "PASS" : "FAIL", r.wall_time);
}

int execute(const lab::ExperimentConfig& cfg) {
  const lab::RunReport r = lab::run(cfg);
  print(r);
  return lab::exit_code(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments and acceptance checks for heat control from hypersurfaces", "lab"};
  app.set_version_flag("--version", std::string(lab::kToolVersion));
  app.require_subcommand(1);

  std::vector<Command> cmds;
  cmds.reserve(8);
  auto make = [&](CLI::App* parent, const std::string& name, const std::string& experiment, const std::string& help) {
    cmds.push_back({experiment, parent->add_subcommand(name, help), {}, {}, {}});
    add_flags(cmds.back());
  };
  make(&app, "tgcc", "tgcc", "sample the geometric control condition along rays");
  make(&app, "spectra", "spectra", "per-eigenspace Cauchy-data lower bounds");
  CLI::App* counter = app.add_subcommand("counterexample", "eigenfunction counterexamples");
  counter->require_subcommand(1);
  make(counter, "sphere", "counterexample-sphere", "equatorial data of Y_l^{l-1} on the round sphere");
  make(counter, "revolution", "counterexample-revolution", "concentrated modes on a surface of revolution");
  make(&app, "kernel", "kernel", "verify the transmutation kernel");
  make(&app, "gramian", "gramian", "observability Gramian spectra");
  make(&app, "control", "control", "Lebeau-Robbiano control of a random state");
  make(&app, "accept-all", "accept-all", "run the acceptance suite");

  std::string config_path;
  CLI::App* runc = app.add_subcommand("run", "run an experiment from a JSON config file");
  runc->add_option("--config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*runc) return execute(lab::parse_config_text(read_text(config_path)));
    for (const Command& c : cmds)
      if (*c.app) return execute(lab::parse_config(to_config(c)));
  } catch (const lab::LabError& e) {
    std::fprintf(stderr, "lab: %s\n", e.what());
    return e.code() == lab::ErrorCode::ConfigError || e.code() == lab::ErrorCode::IoError ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lab: %s\n", e.what());
    return 1;
  }
  return 2;
}
