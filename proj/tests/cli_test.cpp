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

// Exercises the installed binary the way a user would; the documented exit
// codes are a stable contract. The binary path and the committed data files
// come in through NIMBUS_CLI and NIMBUS_SRC.

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nimbus/cli/artifacts.hpp"

namespace nimbus {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string cli_path() {
  const char* env = std::getenv("NIMBUS_CLI");
  return env == nullptr ? "" : env;
}

std::string src_dir() {
  const char* env = std::getenv("NIMBUS_SRC");
  return env == nullptr ? "" : env;
}

int run_cli(const std::string& args) {
  const std::string command = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nimbus_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_FALSE(cli_path().empty()) << "NIMBUS_CLI not set";
    ASSERT_FALSE(src_dir().empty()) << "NIMBUS_SRC not set";
    scenario_ = fs::path(src_dir()) / "data" / "basic_scenario.json";
    ASSERT_TRUE(fs::exists(scenario_)) << scenario_;
  }

  fs::path scenario_;
};

TEST_F(CliTest, SimulateWritesTraceAndReports) {
  const auto out = fresh_dir("simulate");
  const int rc =
      run_cli("simulate --scenario " + scenario_.string() + " --out " + out.string());
  EXPECT_EQ(rc, 0);
  EXPECT_TRUE(fs::exists(out / "trace.json"));
  EXPECT_TRUE(fs::exists(out / "report_P1.json"));
  EXPECT_TRUE(fs::exists(out / "artifact.json"));
  // No stray temp files from the atomic writes.
  for (const auto& entry : fs::directory_iterator(out)) {
    EXPECT_EQ(entry.path().extension(), ".json") << entry.path();
  }
}

TEST_F(CliTest, SimulateOutputsPassValidate) {
  const auto out = fresh_dir("roundtrip");
  ASSERT_EQ(run_cli("simulate --scenario " + scenario_.string() + " --out " +
                    out.string()),
            0);
  EXPECT_EQ(run_cli("validate " + (out / "trace.json").string()), 0);
  EXPECT_EQ(run_cli("validate " + (out / "report_P1.json").string()), 0);
  EXPECT_EQ(run_cli("validate " + scenario_.string()), 0);
}

TEST_F(CliTest, ValidateAcceptsCommittedProductAndCatalogFiles) {
  const auto data = fs::path(src_dir()) / "data";
  EXPECT_EQ(run_cli("validate " + (data / "sample_product.json").string()), 0);
  EXPECT_EQ(run_cli("validate " + (data / "sample_catalog.json").string()), 0);
}

TEST_F(CliTest, MalformedScenarioExitsTwoAndNamesTheId) {
  const auto out = fresh_dir("malformed");
  auto j = cli::read_json_file(scenario_);
  j["failure_injections"] = json::array(
      {{{"time", 5}, {"service_id", "sX"}, {"action", "fail"}}});
  const auto bad = out / "bad_scenario.json";
  cli::write_json_atomic(bad, j);

  const std::string command = cli_path() + " simulate --scenario " +
                              bad.string() + " --out " + out.string() +
                              " 2>" + (out / "stderr.txt").string();
  const int rc = WEXITSTATUS(std::system(command.c_str()));
  EXPECT_EQ(rc, 2);
  std::ifstream err(out / "stderr.txt");
  std::string text((std::istreambuf_iterator<char>(err)),
                   std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("sX"), std::string::npos) << text;
}

TEST_F(CliTest, FullyFailedCloudExitsThree) {
  const auto out = fresh_dir("abort");
  auto j = cli::read_json_file(scenario_);
  j["topology"]["clouds"][0]["max_services"] = 2;
  j["failure_injections"] = json::array(
      {{{"time", 20}, {"service_id", "s1"}, {"action", "fail"}},
       {{"time", 23}, {"service_id", "s2"}, {"action", "fail"}}});
  const auto doomed = out / "doomed_scenario.json";
  cli::write_json_atomic(doomed, j);

  EXPECT_EQ(run_cli("simulate --scenario " + doomed.string() + " --out " +
                    out.string()),
            3);
  const auto report = cli::read_json_file(out / "report_P1.json");
  EXPECT_EQ(report["aborted_clouds"], json::array({"C1"}));
}

TEST_F(CliTest, SeedOverrideOnlyMovesDefects) {
  const auto out_a = fresh_dir("seed_a");
  const auto out_b = fresh_dir("seed_b");
  ASSERT_EQ(run_cli("simulate --scenario " + scenario_.string() + " --out " +
                    out_a.string()),
            0);
  ASSERT_EQ(run_cli("simulate --scenario " + scenario_.string() +
                    " --seed 777 --out " + out_b.string()),
            0);
  const auto a = cli::read_json_file(out_a / "trace.json");
  const auto b = cli::read_json_file(out_b / "trace.json");
  EXPECT_EQ(a["events"].dump(), b["events"].dump());
  EXPECT_EQ(a["metrics"].dump(), b["metrics"].dump());
}

TEST_F(CliTest, ValidateFlagsBrokenReports) {
  const auto out = fresh_dir("validate");
  json report = {
      {"version", "v1"},
      {"kind", "final_report"},
      {"product_id", "P1"},
      {"etrs",
       json::array({{{"cloud_id", "C1"},
                     {"technique_id", "unit"},
                     {"total_cases", 10},
                     {"total_defects", -2},
                     {"cpu_time", 30},
                     {"elapsed", 30},
                     {"eptr_count", 1}}})},
      {"aborted_clouds", json::array()},
      {"grand_total_cases", 10},
      {"grand_total_defects", -2},
      {"grand_cpu_time", 30},
      {"deadline_met", true},
      {"exception_log", json::array()},
  };
  const auto bad = out / "bad_report.json";
  cli::write_json_atomic(bad, report);
  EXPECT_EQ(run_cli("validate " + bad.string()), 1);

  // Diagnostic text cites the violated invariant.
  const std::string command = cli_path() + " validate " + bad.string() +
                              " >" + (out / "diag.txt").string() + " 2>&1";
  ASSERT_EQ(WEXITSTATUS(std::system(command.c_str())), 1);
  std::ifstream diag_file(out / "diag.txt");
  std::string text((std::istreambuf_iterator<char>(diag_file)),
                   std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("negative"), std::string::npos) << text;
}

TEST_F(CliTest, ValidateRejectsUnknownVersion) {
  const auto out = fresh_dir("version");
  const json j = {{"version", "v7"}, {"kind", "scenario"}};
  const auto path = out / "future.json";
  cli::write_json_atomic(path, j);

  const std::string command = cli_path() + " validate " + path.string() +
                              " >" + (out / "diag.txt").string() + " 2>&1";
  const int rc = WEXITSTATUS(std::system(command.c_str()));
  EXPECT_EQ(rc, 1);
  std::ifstream diag_file(out / "diag.txt");
  std::string text((std::istreambuf_iterator<char>(diag_file)),
                   std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("unsupported version"), std::string::npos) << text;
}

TEST_F(CliTest, ReportRendersBothFormats) {
  const auto out = fresh_dir("report");
  ASSERT_EQ(run_cli("simulate --scenario " + scenario_.string() + " --out " +
                    out.string()),
            0);
  EXPECT_EQ(run_cli("report --trace " + (out / "trace.json").string() +
                    " --format text"),
            0);
  const std::string command = cli_path() + " report --trace " +
                              (out / "trace.json").string() +
                              " --format structured >" +
                              (out / "summary.json").string();
  ASSERT_EQ(WEXITSTATUS(std::system(command.c_str())), 0);
  const auto summary = cli::read_json_file(out / "summary.json");
  EXPECT_EQ(summary["kind"], "run_summary");
  EXPECT_EQ(summary["products"]["P1"]["cases"], 40);
}

TEST_F(CliTest, MissingFileIsAnIoErrorWithPathContext) {
  const auto out = fresh_dir("missing");
  const std::string command = cli_path() + " validate " +
                              (out / "nope.json").string() + " 2>" +
                              (out / "stderr.txt").string();
  const int rc = WEXITSTATUS(std::system(command.c_str()));
  EXPECT_EQ(rc, 1);
  std::ifstream err(out / "stderr.txt");
  std::string text((std::istreambuf_iterator<char>(err)),
                   std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("nope.json"), std::string::npos) << text;
}

}  // namespace
}  // namespace nimbus
