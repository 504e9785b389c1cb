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

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nimbus/exec/execution.hpp"
#include "nimbus/fault/fault.hpp"

// Testing Application Management: validates EPTRs against the output
// standard, merges them into per-cloud ETRs, and integrates ETRs into the
// product-level final report. Pure functions over immutable report lists.

namespace nimbus::agg {

using core::CloudId;
using core::ProductId;
using core::ServiceId;
using core::TechniqueId;
using core::Tick;

// What every task output must contain. Extra fields beyond the report schema
// are tolerated by default.
struct OutputStandard {
  std::vector<std::string> required_fields = {"cases_executed", "defects_found",
                                              "time_spent"};
  bool allow_extra = true;

  friend bool operator==(const OutputStandard&, const OutputStandard&) = default;
};

// Per-cloud merge of EPTRs. cpu_time sums time_spent; elapsed is the latest
// finish relative to the cloud's start.
struct Etr {
  CloudId cloud_id;
  TechniqueId technique_id;
  std::int64_t total_cases = 0;
  std::int64_t total_defects = 0;
  Tick cpu_time = 0;
  Tick elapsed = 0;
  std::int64_t eptr_count = 0;

  friend bool operator==(const Etr&, const Etr&) = default;
};

// Product-level integration of all ETRs plus the exception log.
struct FinalReport {
  ProductId product_id;
  std::vector<Etr> etrs;
  std::vector<CloudId> aborted_clouds;
  std::int64_t grand_total_cases = 0;
  std::int64_t grand_total_defects = 0;
  Tick grand_cpu_time = 0;
  bool deadline_met = true;
  std::vector<fault::FaultRecord> exception_log;

  friend bool operator==(const FinalReport&, const FinalReport&) = default;
};

// Structural check of a serialized report record against the standard.
// Returns violations ("missing:<field>", "extra:<field>"); empty means ok.
// Violations are data, not errors.
std::vector<std::string> validate_output_standard(const nlohmann::json& record,
                                                  const OutputStandard& standard);
std::vector<std::string> validate_output_standard(const exec::Eptr& report,
                                                  const OutputStandard& standard);

// Merges one cloud's EPTRs. `service_cloud` maps service ids to their cloud;
// the whole merge is rejected if any EPTR violates the standard or spans
// clouds. Order-independent: permuting eptrs yields an identical ETR.
// Errors: kEmptyReportSet, kOutputStandardViolation, kMixedCloud.
Etr merge_eptrs(const CloudId& cloud_id, const TechniqueId& technique_id,
                const std::vector<exec::Eptr>& eptrs,
                const OutputStandard& standard,
                const std::map<ServiceId, CloudId>& service_cloud,
                Tick cloud_start);

// Integrates per-cloud ETRs into the final report. Every cloud in
// `expected_clouds` must either contribute an ETR or appear in
// `aborted_clouds`; otherwise Error(kMissingCloudReport).
// deadline_met = (max elapsed <= deadline).
FinalReport integrate_etrs(const ProductId& product_id,
                           const std::vector<Etr>& etrs, Tick deadline,
                           const std::vector<fault::FaultRecord>& faults,
                           const std::vector<CloudId>& expected_clouds,
                           const std::vector<CloudId>& aborted_clouds);

// JSON bindings (payload level; files add {"version","kind"}).
void to_json(nlohmann::json& j, const OutputStandard& s);
void from_json(const nlohmann::json& j, OutputStandard& s);
void to_json(nlohmann::json& j, const Etr& e);
void from_json(const nlohmann::json& j, Etr& e);
void to_json(nlohmann::json& j, const FinalReport& r);
void from_json(const nlohmann::json& j, FinalReport& r);

}  // namespace nimbus::agg

namespace nimbus::exec {
void to_json(nlohmann::json& j, const Eptr& e);
void from_json(const nlohmann::json& j, Eptr& e);
}  // namespace nimbus::exec
