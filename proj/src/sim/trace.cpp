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

#include "nimbus/sim/trace.hpp"

#include "nimbus/core/error.hpp"

namespace nimbus::sim {

bool SimResult::any_cloud_aborted() const {
  for (const auto& record : fault_records) {
    if (record.action == fault::RecoveryAction::kAbortCloud) return true;
  }
  return false;
}

Metrics compute_metrics(const SimResult& result) {
  Metrics metrics;
  if (result.any_eptr && result.last_finish > result.first_arrival) {
    metrics.makespan = result.last_finish - result.first_arrival;
  }
  for (const auto& [sid, usage] : result.service_usage) {
    ServiceMetric m;
    if (usage.total_ticks > 0) {
      m.availability = static_cast<double>(usage.up_ticks) /
                       static_cast<double>(usage.total_ticks);
    }
    if (usage.up_ticks > 0) {
      m.utilization = static_cast<double>(usage.busy_ticks) /
                      static_cast<double>(usage.up_ticks);
    }
    metrics.services[sid] = m;
  }
  return metrics;
}

void to_json(nlohmann::json& j, const LogEntry& e) {
  j = nlohmann::json{{"seq", e.seq},   {"send", e.send}, {"deliver", e.deliver},
                     {"type", e.type}, {"from", e.from}, {"to", e.to},
                     {"note", e.note}};
}

void from_json(const nlohmann::json& j, LogEntry& e) {
  j.at("seq").get_to(e.seq);
  j.at("send").get_to(e.send);
  j.at("deliver").get_to(e.deliver);
  j.at("type").get_to(e.type);
  j.at("from").get_to(e.from);
  j.at("to").get_to(e.to);
  j.at("note").get_to(e.note);
}

void to_json(nlohmann::json& j, const TaskSummary& t) {
  j = nlohmann::json{{"status", t.status},
                     {"executions", t.executions},
                     {"case_count", t.case_count},
                     {"product_id", t.product_id},
                     {"cloud_id", t.cloud_id}};
}

void from_json(const nlohmann::json& j, TaskSummary& t) {
  j.at("status").get_to(t.status);
  j.at("executions").get_to(t.executions);
  j.at("case_count").get_to(t.case_count);
  j.at("product_id").get_to(t.product_id);
  j.at("cloud_id").get_to(t.cloud_id);
}

void to_json(nlohmann::json& j, const ProductOutcome& o) {
  j = nlohmann::json{{"status", o.status}, {"reason", o.reason}};
  if (o.report.has_value()) j["report"] = *o.report;
}

void from_json(const nlohmann::json& j, ProductOutcome& o) {
  j.at("status").get_to(o.status);
  j.at("reason").get_to(o.reason);
  if (j.contains("report")) o.report = j.at("report").get<agg::FinalReport>();
}

void to_json(nlohmann::json& j, const ServiceUsage& u) {
  j = nlohmann::json{{"up_ticks", u.up_ticks},
                     {"busy_ticks", u.busy_ticks},
                     {"total_ticks", u.total_ticks}};
}

void from_json(const nlohmann::json& j, ServiceUsage& u) {
  j.at("up_ticks").get_to(u.up_ticks);
  j.at("busy_ticks").get_to(u.busy_ticks);
  j.at("total_ticks").get_to(u.total_ticks);
}

void to_json(nlohmann::json& j, const ServiceMetric& m) {
  j = nlohmann::json{{"availability", m.availability},
                     {"utilization", m.utilization}};
}

void from_json(const nlohmann::json& j, ServiceMetric& m) {
  j.at("availability").get_to(m.availability);
  j.at("utilization").get_to(m.utilization);
}

void to_json(nlohmann::json& j, const Metrics& m) {
  j = nlohmann::json{{"makespan", m.makespan},
                     {"services", nlohmann::json::object()}};
  for (const auto& [sid, metric] : m.services) j["services"][sid] = metric;
}

void from_json(const nlohmann::json& j, Metrics& m) {
  j.at("makespan").get_to(m.makespan);
  m.services.clear();
  for (const auto& [sid, metric] : j.at("services").items()) {
    m.services[sid] = metric.get<ServiceMetric>();
  }
}

nlohmann::json trace_to_json(const SimResult& result) {
  nlohmann::json j;
  j["version"] = "v1";
  j["kind"] = "trace";
  j["seed"] = result.seed;
  j["latency"] = result.latency;
  j["end_time"] = result.end_time;
  j["first_arrival"] = result.first_arrival;
  j["last_finish"] = result.last_finish;
  j["any_eptr"] = result.any_eptr;
  j["events"] = result.events;
  j["plans"] = result.plans;
  j["fault_records"] = result.fault_records;
  j["outcomes"] = nlohmann::json::object();
  for (const auto& [pid, outcome] : result.outcomes) j["outcomes"][pid] = outcome;
  j["tasks"] = nlohmann::json::object();
  for (const auto& [tid, summary] : result.tasks) j["tasks"][tid] = summary;
  j["service_usage"] = nlohmann::json::object();
  for (const auto& [sid, usage] : result.service_usage) {
    j["service_usage"][sid] = usage;
  }
  j["metrics"] = result.metrics;
  j["disjointness_ok"] = result.disjointness_ok;
  j["causality_ok"] = result.causality_ok;
  return j;
}

SimResult trace_from_json(const nlohmann::json& j) {
  if (j.value("version", "") != "v1") {
    throw_error(ErrorCode::kParseError, "version",
                "unsupported trace version: " + j.value("version", "<absent>"));
  }
  if (j.value("kind", "") != "trace") {
    throw_error(ErrorCode::kParseError, "kind",
                "file kind is not 'trace': " + j.value("kind", "<absent>"));
  }
  SimResult result;
  j.at("seed").get_to(result.seed);
  j.at("latency").get_to(result.latency);
  j.at("end_time").get_to(result.end_time);
  j.at("first_arrival").get_to(result.first_arrival);
  j.at("last_finish").get_to(result.last_finish);
  j.at("any_eptr").get_to(result.any_eptr);
  j.at("events").get_to(result.events);
  result.plans = j.at("plans");
  j.at("fault_records").get_to(result.fault_records);
  for (const auto& [pid, outcome] : j.at("outcomes").items()) {
    result.outcomes[pid] = outcome.get<ProductOutcome>();
  }
  for (const auto& [tid, summary] : j.at("tasks").items()) {
    result.tasks[tid] = summary.get<TaskSummary>();
  }
  for (const auto& [sid, usage] : j.at("service_usage").items()) {
    result.service_usage[sid] = usage.get<ServiceUsage>();
  }
  j.at("metrics").get_to(result.metrics);
  j.at("disjointness_ok").get_to(result.disjointness_ok);
  j.at("causality_ok").get_to(result.causality_ok);
  return result;
}

}  // namespace nimbus::sim
