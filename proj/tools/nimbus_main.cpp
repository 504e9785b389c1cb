// Copyright 2026 The Nimbus Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: submit scenarios, validate artifact files, render
// reports. Exit codes are a stable contract:
//   0  success
//   1  I/O or artifact validation diagnostics
//   2  invalid scenario
//   3  a testing cloud was aborted during the run
//
// NIMBUS_LOG={error|info|debug} controls stderr verbosity only; it never
// affects results.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nimbus/cli/artifacts.hpp"
#include "nimbus/core/error.hpp"
#include "nimbus/sim/engine.hpp"
#include "nimbus/sim/scenario.hpp"

namespace {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("NIMBUS_LOG");
    if (env == nullptr) return LogLevel::kError;
    const std::string value(env);
    if (value == "debug") return LogLevel::kDebug;
    if (value == "info") return LogLevel::kInfo;
    return LogLevel::kError;
  }();
  return level;
}

void log_info(const std::string& message) {
  if (log_level() >= LogLevel::kInfo) std::cerr << "[info] " << message << "\n";
}

void log_debug(const std::string& message) {
  if (log_level() >= LogLevel::kDebug) std::cerr << "[debug] " << message << "\n";
}

int run_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
  namespace fs = std::filesystem;
  using nimbus::cli::read_json_file;
  using nimbus::cli::write_json_atomic;

  auto scenario_json = read_json_file(scenario_path);
  auto scenario = nimbus::sim::scenario_from_json(scenario_json);
  if (seed_override.has_value()) scenario.seed = *seed_override;

  fs::create_directories(out_dir);
  log_info("running scenario " + scenario_path + " with seed " +
           std::to_string(scenario.seed));

  const auto result = nimbus::sim::run_simulation(scenario);
  log_debug("simulation ended at tick " + std::to_string(result.end_time) +
            " after " + std::to_string(result.events.size()) + " events");

  nlohmann::json artifact;
  artifact["version"] = "v1";
  artifact["kind"] = "run_artifact";
  artifact["scenario"] = scenario_path;

  const fs::path trace_path = fs::path(out_dir) / "trace.json";
  write_json_atomic(trace_path, nimbus::sim::trace_to_json(result));
  artifact["trace"] = trace_path.string();
  std::cout << "trace: " << trace_path.string() << "\n";

  artifact["reports"] = nlohmann::json::array();
  for (const auto& [pid, outcome] : result.outcomes) {
    if (!outcome.report.has_value()) {
      log_info("product " + pid + " rejected: " + outcome.reason);
      continue;
    }
    const fs::path report_path = fs::path(out_dir) / ("report_" + pid + ".json");
    write_json_atomic(report_path, nimbus::cli::final_report_file(*outcome.report));
    artifact["reports"].push_back(report_path.string());
    std::cout << "report: " << report_path.string() << "\n";
  }

  const bool aborted = result.any_cloud_aborted();
  artifact["exit_status"] = aborted ? 3 : 0;
  write_json_atomic(fs::path(out_dir) / "artifact.json", artifact);

  if (aborted) {
    std::cerr << "a testing cloud was aborted; see the trace exception log\n";
    return 3;
  }
  return 0;
}

int run_validate(const std::string& path) {
  const auto j = nimbus::cli::read_json_file(path);
  const auto diags = nimbus::cli::validate_artifact(j);
  for (const auto& diag : diags) {
    std::cout << path << ": " << diag << "\n";
  }
  if (diags.empty()) {
    log_info(path + " is clean");
    return 0;
  }
  return 1;
}

int run_report(const std::string& trace_path, const std::string& format) {
  const auto j = nimbus::cli::read_json_file(trace_path);
  const auto result = nimbus::sim::trace_from_json(j);
  if (format == "structured") {
    std::cout << nimbus::cli::render_report_structured(result).dump(2) << "\n";
  } else {
    std::cout << nimbus::cli::render_report_text(result);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nimbus: exclusive testing-cloud orchestration on a deterministic simulated network"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  auto* simulate = app.add_subcommand("simulate", "run a scenario file");
  simulate->add_option("--scenario", scenario_path, "scenario file (JSON, v1)")
      ->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--seed", seed, "override the scenario seed")
      ->each([&](const std::string&) { seed_set = true; });

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "schema-check an artifact file");
  validate->add_option("file", validate_path, "artifact file")->required();

  std::string trace_path;
  std::string format = "text";
  auto* report = app.add_subcommand("report", "render a run trace");
  report->add_option("--trace", trace_path, "trace file")->required();
  report->add_option("--format", format, "text|structured")
      ->check(CLI::IsMember({"text", "structured"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      return run_simulate(scenario_path, out_dir,
                          seed_set ? std::optional<std::uint64_t>(seed)
                                   : std::nullopt);
    }
    if (validate->parsed()) {
      return run_validate(validate_path);
    }
    if (report->parsed()) {
      return run_report(trace_path, format);
    }
  } catch (const nimbus::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == nimbus::ErrorCode::kScenarioInvalid ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
