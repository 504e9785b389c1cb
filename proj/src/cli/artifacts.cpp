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

#include "nimbus/cli/artifacts.hpp"

#include <fstream>
#include <sstream>

#include "nimbus/alloc/allocation.hpp"
#include "nimbus/core/error.hpp"
#include "nimbus/core/serialization.hpp"
#include "nimbus/core/validate.hpp"
#include "nimbus/sim/engine.hpp"
#include "nimbus/sim/scenario.hpp"

namespace nimbus::cli {

namespace fs = std::filesystem;
using core::Tick;
using nlohmann::json;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw_error(ErrorCode::kIoError, path.string(),
                "cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw_error(ErrorCode::kParseError, path.string(),
                path.string() + ": " + e.what());
  }
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) {
      throw_error(ErrorCode::kIoError, path.string(),
                  "cannot write " + tmp.string());
    }
    out << content;
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    throw_error(ErrorCode::kIoError, path.string(),
                "cannot rename " + tmp.string() + " to " + path.string());
  }
}

void write_json_atomic(const fs::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

json final_report_file(const agg::FinalReport& report) {
  json j = report;
  j["version"] = "v1";
  j["kind"] = "final_report";
  return j;
}

namespace {

std::vector<std::string> validate_scenario_file(const json& j) {
  std::vector<std::string> diags;
  try {
    const auto scenario = sim::scenario_from_json(j);
    const auto inner = sim::validate_scenario(scenario);
    diags.insert(diags.end(), inner.begin(), inner.end());
  } catch (const Error& e) {
    diags.push_back(e.what());
  }
  return diags;
}

std::vector<std::string> validate_trace_file(const json& j) {
  std::vector<std::string> diags;
  sim::SimResult result;
  try {
    result = sim::trace_from_json(j);
  } catch (const std::exception& e) {
    diags.push_back(e.what());
    return diags;
  }
  Tick last_deliver = 0;
  std::int64_t last_seq = -1;
  bool first = true;
  for (const auto& entry : result.events) {
    if (entry.deliver < entry.send) {
      diags.push_back("event seq " + std::to_string(entry.seq) +
                      " delivered before it was sent");
    }
    const Tick delay = entry.deliver - entry.send;
    if (delay != 0 && delay != result.latency) {
      diags.push_back("event seq " + std::to_string(entry.seq) +
                      " has delay outside {0, latency}");
    }
    if (!first && (entry.deliver < last_deliver ||
                   (entry.deliver == last_deliver && entry.seq <= last_seq))) {
      diags.push_back("events not in (time, seq) dequeue order at seq " +
                      std::to_string(entry.seq));
    }
    first = false;
    last_deliver = entry.deliver;
    last_seq = entry.seq;
  }
  if (!result.disjointness_ok) {
    diags.push_back("trace records an exclusivity violation (disjointness_ok=false)");
  }
  if (!result.causality_ok) {
    diags.push_back("trace records a causality violation (causality_ok=false)");
  }
  return diags;
}

std::vector<std::string> validate_final_report_file(const json& j) {
  std::vector<std::string> diags;
  agg::FinalReport report;
  try {
    report = j.get<agg::FinalReport>();
  } catch (const std::exception& e) {
    diags.push_back(e.what());
    return diags;
  }
  std::int64_t cases = 0, defects = 0;
  Tick cpu = 0;
  for (const auto& etr : report.etrs) {
    if (etr.total_cases < 0 || etr.total_defects < 0 || etr.cpu_time < 0) {
      diags.push_back("ETR " + etr.cloud_id +
                      " has a negative count (counts must be >= 0)");
    }
    if (etr.total_defects > etr.total_cases) {
      diags.push_back("ETR " + etr.cloud_id +
                      " violates defects_found <= cases_executed");
    }
    if (etr.eptr_count < 1) {
      diags.push_back("ETR " + etr.cloud_id + " violates eptr_count >= 1");
    }
    cases += etr.total_cases;
    defects += etr.total_defects;
    cpu += etr.cpu_time;
  }
  if (cases != report.grand_total_cases || defects != report.grand_total_defects ||
      cpu != report.grand_cpu_time) {
    diags.push_back("grand totals do not equal the sums over ETRs");
  }
  return diags;
}

std::vector<std::string> validate_product_file(const json& j) {
  std::vector<std::string> diags;
  try {
    const auto product = j.at("product").get<core::ProductSpec>();
    core::check_product_spec(product);
  } catch (const std::exception& e) {
    diags.push_back(e.what());
  }
  return diags;
}

std::vector<std::string> validate_catalog_file(const json& j) {
  std::vector<std::string> diags;
  try {
    const auto specs = j.at("techniques").get<std::vector<core::TechniqueSpec>>();
    std::set<std::string> seen;
    for (const auto& spec : specs) {
      core::check_technique_spec(spec);
      if (!seen.insert(spec.technique_id).second) {
        diags.push_back("duplicate technique " + spec.technique_id);
      }
    }
  } catch (const std::exception& e) {
    diags.push_back(e.what());
  }
  return diags;
}

std::vector<std::string> validate_registry_file(const json& j) {
  std::vector<std::string> diags;
  try {
    const auto registry = j.at("registry").get<core::Registry>();
    if (!alloc::verify_disjointness(registry)) {
      diags.push_back("registry snapshot violates the exclusivity invariant");
    }
  } catch (const std::exception& e) {
    diags.push_back(e.what());
  }
  return diags;
}

}  // namespace

std::vector<std::string> validate_artifact(const json& j) {
  std::vector<std::string> diags;
  if (!j.is_object()) {
    diags.push_back("artifact is not a JSON object");
    return diags;
  }
  const auto version = j.value("version", std::string{});
  if (version != "v1") {
    diags.push_back("unsupported version: " +
                    (version.empty() ? "<absent>" : version));
    return diags;
  }
  const auto kind = j.value("kind", std::string{});
  if (kind == "scenario") return validate_scenario_file(j);
  if (kind == "trace") return validate_trace_file(j);
  if (kind == "final_report") return validate_final_report_file(j);
  if (kind == "product") return validate_product_file(j);
  if (kind == "catalog") return validate_catalog_file(j);
  if (kind == "registry") return validate_registry_file(j);
  diags.push_back("unknown artifact kind: " + (kind.empty() ? "<absent>" : kind));
  return diags;
}

std::string render_report_text(const sim::SimResult& result) {
  std::ostringstream out;
  out << "run: end_time=" << result.end_time
      << " makespan=" << result.metrics.makespan
      << " products=" << result.outcomes.size() << "\n";
  for (const auto& [pid, outcome] : result.outcomes) {
    out << "product " << pid << ": " << outcome.status;
    if (outcome.status == "rejected") {
      out << " (" << outcome.reason << ")\n";
      continue;
    }
    const auto& report = *outcome.report;
    out << " cases=" << report.grand_total_cases
        << " defects=" << report.grand_total_defects
        << " cpu_time=" << report.grand_cpu_time
        << " deadline_met=" << (report.deadline_met ? "yes" : "no") << "\n";
    for (const auto& etr : report.etrs) {
      out << "  cloud " << etr.cloud_id << " [" << etr.technique_id
          << "]: cases=" << etr.total_cases << " defects=" << etr.total_defects
          << " cpu=" << etr.cpu_time << " elapsed=" << etr.elapsed
          << " reports=" << etr.eptr_count << "\n";
    }
    for (const auto& cloud : report.aborted_clouds) {
      out << "  cloud " << cloud << ": ABORTED\n";
    }
    if (!report.exception_log.empty()) {
      out << "  exceptions: " << report.exception_log.size() << "\n";
      for (const auto& record : report.exception_log) {
        out << "    t=" << record.time << " "
            << fault::exception_kind_name(record.kind) << " "
            << record.subject << " -> "
            << fault::recovery_action_name(record.action)
            << " (attempt " << record.attempt << ")\n";
      }
    }
  }
  out << "services:\n";
  for (const auto& [sid, metric] : result.metrics.services) {
    out << "  " << sid << ": availability=" << metric.availability
        << " utilization=" << metric.utilization << "\n";
  }
  return out.str();
}

nlohmann::json render_report_structured(const sim::SimResult& result) {
  json j;
  j["version"] = "v1";
  j["kind"] = "run_summary";
  j["end_time"] = result.end_time;
  j["metrics"] = result.metrics;
  j["products"] = json::object();
  for (const auto& [pid, outcome] : result.outcomes) {
    json p;
    p["status"] = outcome.status;
    if (outcome.report.has_value()) {
      p["cases"] = outcome.report->grand_total_cases;
      p["defects"] = outcome.report->grand_total_defects;
      p["cpu_time"] = outcome.report->grand_cpu_time;
      p["deadline_met"] = outcome.report->deadline_met;
      p["exceptions"] = outcome.report->exception_log.size();
    } else {
      p["reason"] = outcome.reason;
    }
    j["products"][pid] = p;
  }
  return j;
}

}  // namespace nimbus::cli
