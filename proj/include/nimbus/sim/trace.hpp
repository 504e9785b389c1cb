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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nimbus/agg/aggregation.hpp"
#include "nimbus/fault/fault.hpp"

// The deterministic record of a run: ordered message log, fault records,
// per-product reports and metrics. Byte-identical across runs of the same
// scenario.

namespace nimbus::sim {

using core::ProductId;
using core::ServiceId;
using core::TaskId;
using core::Tick;

// One processed event. send/deliver differ by exactly the hop latency for
// messages between components; local timers and injections deliver when sent.
struct LogEntry {
  std::int64_t seq = 0;
  Tick send = 0;
  Tick deliver = 0;
  std::string type;
  std::string from;
  std::string to;
  std::string note;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct TaskSummary {
  std::string status;  // "completed" | "aborted"
  int executions = 0;
  std::int64_t case_count = 0;
  ProductId product_id;
  core::CloudId cloud_id;

  friend bool operator==(const TaskSummary&, const TaskSummary&) = default;
};

struct ProductOutcome {
  std::string status;  // "completed" | "rejected"
  std::string reason;  // set when rejected
  std::optional<agg::FinalReport> report;

  friend bool operator==(const ProductOutcome&, const ProductOutcome&) = default;
};

// Raw per-service usage counters collected by the engine.
struct ServiceUsage {
  Tick up_ticks = 0;
  Tick busy_ticks = 0;
  Tick total_ticks = 0;

  friend bool operator==(const ServiceUsage&, const ServiceUsage&) = default;
};

struct ServiceMetric {
  double availability = 0.0;  // up_ticks / total_ticks
  double utilization = 0.0;   // busy_ticks / up_ticks

  friend bool operator==(const ServiceMetric&, const ServiceMetric&) = default;
};

struct Metrics {
  Tick makespan = 0;  // last report finish - first request arrival
  std::map<ServiceId, ServiceMetric> services;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct SimResult {
  std::uint64_t seed = 0;
  Tick latency = 1;
  Tick end_time = 0;
  Tick first_arrival = 0;
  Tick last_finish = 0;
  bool any_eptr = false;
  std::vector<LogEntry> events;
  nlohmann::json plans = nlohmann::json::array();
  std::vector<fault::FaultRecord> fault_records;
  std::map<ProductId, ProductOutcome> outcomes;
  std::map<TaskId, TaskSummary> tasks;
  std::map<ServiceId, ServiceUsage> service_usage;
  Metrics metrics;
  bool disjointness_ok = true;
  bool causality_ok = true;

  bool any_cloud_aborted() const;

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

// Derives availability, utilization and makespan from the raw counters.
// An empty trace yields all-zero metrics.
Metrics compute_metrics(const SimResult& result);

void to_json(nlohmann::json& j, const LogEntry& e);
void from_json(const nlohmann::json& j, LogEntry& e);
void to_json(nlohmann::json& j, const TaskSummary& t);
void from_json(const nlohmann::json& j, TaskSummary& t);
void to_json(nlohmann::json& j, const ProductOutcome& o);
void from_json(const nlohmann::json& j, ProductOutcome& o);
void to_json(nlohmann::json& j, const ServiceUsage& u);
void from_json(const nlohmann::json& j, ServiceUsage& u);
void to_json(nlohmann::json& j, const ServiceMetric& m);
void from_json(const nlohmann::json& j, ServiceMetric& m);
void to_json(nlohmann::json& j, const Metrics& m);
void from_json(const nlohmann::json& j, Metrics& m);

// File-level (versioned) trace serialization.
nlohmann::json trace_to_json(const SimResult& result);
SimResult trace_from_json(const nlohmann::json& j);

}  // namespace nimbus::sim
