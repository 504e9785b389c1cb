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

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nimbus/core/types.hpp"
#include "nimbus/sched/scheduler.hpp"

namespace nimbus::sim {

using core::CloudId;
using core::ServiceId;
using core::Tick;

struct ServiceConfig {
  ServiceId service_id;
  double capacity = 1.0;

  friend bool operator==(const ServiceConfig&, const ServiceConfig&) = default;
};

struct CloudConfig {
  CloudId cloud_id;
  core::TechniqueId technique_id;
  int max_services = 1;
  double clone_capacity = 1.0;  // capacity given to services spawned mid-run
  std::vector<ServiceConfig> services;

  friend bool operator==(const CloudConfig&, const CloudConfig&) = default;
};

struct RequestEntry {
  Tick arrival_time = 0;
  sched::DistributionMode mode = sched::DistributionMode::kLpt;
  core::ConsumerRequest request;

  friend bool operator==(const RequestEntry&, const RequestEntry&) = default;
};

enum class InjectionAction { kFail, kRecover };

struct Injection {
  Tick time = 0;
  ServiceId service_id;
  InjectionAction action = InjectionAction::kFail;

  friend bool operator==(const Injection&, const Injection&) = default;
};

// Everything a deterministic run needs. The seed feeds only the simulated
// runner's defect draws; timing and scheduling never consume it.
struct Scenario {
  std::uint64_t seed = 0;
  Tick latency = 1;        // ticks per message hop
  int max_retries = 2;     // per-task recovery budget
  Tick retry_backoff = 5;  // negotiation retry delay
  std::vector<core::TechniqueSpec> catalog;
  std::vector<CloudConfig> clouds;
  std::vector<RequestEntry> requests;
  std::vector<Injection> injections;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Structural and semantic checks: schema-complete fields, positive numbers,
// unique ids, nondecreasing arrivals, injections referencing known services,
// and every request valid against the catalog. Returns diagnostics; empty
// means the scenario is runnable.
std::vector<std::string> validate_scenario(const Scenario& scenario);

// Builds the initial service directory from the topology section.
core::Registry build_registry(const Scenario& scenario);

void to_json(nlohmann::json& j, const ServiceConfig& s);
void from_json(const nlohmann::json& j, ServiceConfig& s);
void to_json(nlohmann::json& j, const CloudConfig& c);
void from_json(const nlohmann::json& j, CloudConfig& c);
void to_json(nlohmann::json& j, const RequestEntry& r);
void from_json(const nlohmann::json& j, RequestEntry& r);
void to_json(nlohmann::json& j, const Injection& i);
void from_json(const nlohmann::json& j, Injection& i);

// File-level (versioned) scenario serialization.
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

}  // namespace nimbus::sim
