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

#include "nimbus/agg/aggregation.hpp"

#include <algorithm>
#include <set>

#include "nimbus/core/error.hpp"

namespace nimbus::exec {

void to_json(nlohmann::json& j, const Eptr& e) {
  j = nlohmann::json{{"service_id", e.service_id},
                     {"task_id", e.task_id},
                     {"cases_executed", e.cases_executed},
                     {"defects_found", e.defects_found},
                     {"time_spent", e.time_spent},
                     {"finished_at", e.finished_at}};
}

void from_json(const nlohmann::json& j, Eptr& e) {
  j.at("service_id").get_to(e.service_id);
  j.at("task_id").get_to(e.task_id);
  j.at("cases_executed").get_to(e.cases_executed);
  j.at("defects_found").get_to(e.defects_found);
  j.at("time_spent").get_to(e.time_spent);
  j.at("finished_at").get_to(e.finished_at);
}

}  // namespace nimbus::exec

namespace nimbus::agg {

namespace {

// Fields an EPTR record may legitimately carry beside the measurements.
const std::set<std::string>& report_schema_fields() {
  static const std::set<std::string> fields = {
      "service_id", "task_id",     "cases_executed",
      "defects_found", "time_spent", "finished_at"};
  return fields;
}

}  // namespace

std::vector<std::string> validate_output_standard(const nlohmann::json& record,
                                                  const OutputStandard& standard) {
  std::vector<std::string> violations;
  for (const auto& field : standard.required_fields) {
    if (!record.contains(field)) violations.push_back("missing:" + field);
  }
  if (!standard.allow_extra) {
    for (const auto& [key, value] : record.items()) {
      if (report_schema_fields().count(key) == 0 &&
          std::find(standard.required_fields.begin(),
                    standard.required_fields.end(),
                    key) == standard.required_fields.end()) {
        violations.push_back("extra:" + key);
      }
    }
  }
  return violations;
}

std::vector<std::string> validate_output_standard(const exec::Eptr& report,
                                                  const OutputStandard& standard) {
  nlohmann::json record = report;
  return validate_output_standard(record, standard);
}

Etr merge_eptrs(const CloudId& cloud_id, const TechniqueId& technique_id,
                const std::vector<exec::Eptr>& eptrs,
                const OutputStandard& standard,
                const std::map<ServiceId, CloudId>& service_cloud,
                Tick cloud_start) {
  if (eptrs.empty()) {
    throw_error(ErrorCode::kEmptyReportSet, cloud_id,
                "no reports to merge for cloud " + cloud_id);
  }
  Etr etr;
  etr.cloud_id = cloud_id;
  etr.technique_id = technique_id;
  Tick latest_finish = cloud_start;
  for (const auto& eptr : eptrs) {
    auto it = service_cloud.find(eptr.service_id);
    if (it == service_cloud.end() || it->second != cloud_id) {
      throw_error(ErrorCode::kMixedCloud, eptr.service_id,
                  "report from service " + eptr.service_id +
                      " does not belong to cloud " + cloud_id);
    }
    const auto violations = validate_output_standard(eptr, standard);
    if (!violations.empty()) {
      std::string detail;
      for (const auto& v : violations) detail += (detail.empty() ? "" : ",") + v;
      throw_error(ErrorCode::kOutputStandardViolation, eptr.service_id,
                  "report from " + eptr.service_id +
                      " violates the output standard: " + detail);
    }
    etr.total_cases += eptr.cases_executed;
    etr.total_defects += eptr.defects_found;
    etr.cpu_time += eptr.time_spent;
    latest_finish = std::max(latest_finish, eptr.finished_at);
    ++etr.eptr_count;
  }
  etr.elapsed = latest_finish - cloud_start;
  return etr;
}

FinalReport integrate_etrs(const ProductId& product_id,
                           const std::vector<Etr>& etrs, Tick deadline,
                           const std::vector<fault::FaultRecord>& faults,
                           const std::vector<CloudId>& expected_clouds,
                           const std::vector<CloudId>& aborted_clouds) {
  std::set<CloudId> reported;
  for (const auto& etr : etrs) reported.insert(etr.cloud_id);
  std::set<CloudId> aborted(aborted_clouds.begin(), aborted_clouds.end());
  for (const auto& cloud : expected_clouds) {
    if (reported.count(cloud) == 0 && aborted.count(cloud) == 0) {
      throw_error(ErrorCode::kMissingCloudReport, cloud,
                  "cloud " + cloud + " produced no report and was not aborted");
    }
  }

  FinalReport report;
  report.product_id = product_id;
  report.etrs = etrs;
  report.aborted_clouds = aborted_clouds;
  Tick max_elapsed = 0;
  for (const auto& etr : etrs) {
    report.grand_total_cases += etr.total_cases;
    report.grand_total_defects += etr.total_defects;
    report.grand_cpu_time += etr.cpu_time;
    max_elapsed = std::max(max_elapsed, etr.elapsed);
  }
  report.deadline_met = max_elapsed <= deadline;
  report.exception_log = faults;
  return report;
}

void to_json(nlohmann::json& j, const OutputStandard& s) {
  j = nlohmann::json{{"required_fields", s.required_fields},
                     {"allow_extra", s.allow_extra}};
}

void from_json(const nlohmann::json& j, OutputStandard& s) {
  j.at("required_fields").get_to(s.required_fields);
  j.at("allow_extra").get_to(s.allow_extra);
}

void to_json(nlohmann::json& j, const Etr& e) {
  j = nlohmann::json{{"cloud_id", e.cloud_id},
                     {"technique_id", e.technique_id},
                     {"total_cases", e.total_cases},
                     {"total_defects", e.total_defects},
                     {"cpu_time", e.cpu_time},
                     {"elapsed", e.elapsed},
                     {"eptr_count", e.eptr_count}};
}

void from_json(const nlohmann::json& j, Etr& e) {
  j.at("cloud_id").get_to(e.cloud_id);
  j.at("technique_id").get_to(e.technique_id);
  j.at("total_cases").get_to(e.total_cases);
  j.at("total_defects").get_to(e.total_defects);
  j.at("cpu_time").get_to(e.cpu_time);
  j.at("elapsed").get_to(e.elapsed);
  j.at("eptr_count").get_to(e.eptr_count);
}

void to_json(nlohmann::json& j, const FinalReport& r) {
  j = nlohmann::json{{"product_id", r.product_id},
                     {"etrs", r.etrs},
                     {"aborted_clouds", r.aborted_clouds},
                     {"grand_total_cases", r.grand_total_cases},
                     {"grand_total_defects", r.grand_total_defects},
                     {"grand_cpu_time", r.grand_cpu_time},
                     {"deadline_met", r.deadline_met},
                     {"exception_log", r.exception_log}};
}

void from_json(const nlohmann::json& j, FinalReport& r) {
  j.at("product_id").get_to(r.product_id);
  j.at("etrs").get_to(r.etrs);
  j.at("aborted_clouds").get_to(r.aborted_clouds);
  j.at("grand_total_cases").get_to(r.grand_total_cases);
  j.at("grand_total_defects").get_to(r.grand_total_defects);
  j.at("grand_cpu_time").get_to(r.grand_cpu_time);
  j.at("deadline_met").get_to(r.deadline_met);
  j.at("exception_log").get_to(r.exception_log);
}

}  // namespace nimbus::agg
