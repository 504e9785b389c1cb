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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nimbus/sim/trace.hpp"

// File-format plumbing shared by the CLI and its tests: versioned artifact
// files, atomic writes, per-kind validators, and report rendering.

namespace nimbus::cli {

// Reads and parses a JSON artifact; errors carry the path for context.
nlohmann::json read_json_file(const std::filesystem::path& path);

// Write-temp-then-rename, so partially written artifacts never appear.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

void write_json_atomic(const std::filesystem::path& path,
                       const nlohmann::json& j);

// Versioned file for a product-level final report.
nlohmann::json final_report_file(const agg::FinalReport& report);

// Schema/invariant check of any known artifact kind (scenario, trace,
// final_report, product, catalog, registry). Returns diagnostics; empty
// means clean.
std::vector<std::string> validate_artifact(const nlohmann::json& j);

// Human-readable run summary for `report --format text`.
std::string render_report_text(const sim::SimResult& result);

// Condensed machine summary for `report --format structured`.
nlohmann::json render_report_structured(const sim::SimResult& result);

}  // namespace nimbus::cli
