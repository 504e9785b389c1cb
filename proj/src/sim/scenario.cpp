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

#include "nimbus/sim/scenario.hpp"

#include <set>

#include "nimbus/alloc/allocation.hpp"
#include "nimbus/core/error.hpp"
#include "nimbus/core/serialization.hpp"
#include "nimbus/core/validate.hpp"

namespace nimbus::sim {

std::vector<std::string> validate_scenario(const Scenario& scenario) {
  std::vector<std::string> diags;

  if (scenario.latency < 0) diags.push_back("latency must be >= 0");
  if (scenario.max_retries < 0) diags.push_back("max_retries must be >= 0");
  if (scenario.retry_backoff < 1) diags.push_back("retry_backoff must be >= 1");

  std::set<core::TechniqueId> techniques;
  for (const auto& spec : scenario.catalog) {
    try {
      core::check_technique_spec(spec);
    } catch (const Error& e) {
      diags.push_back("catalog: " + std::string(e.what()));
    }
    if (!techniques.insert(spec.technique_id).second) {
      diags.push_back("catalog: duplicate technique " + spec.technique_id);
    }
  }

  std::set<CloudId> cloud_ids;
  std::set<ServiceId> service_ids;
  for (const auto& cloud : scenario.clouds) {
    if (cloud.cloud_id.empty()) diags.push_back("topology: empty cloud_id");
    if (!cloud_ids.insert(cloud.cloud_id).second) {
      diags.push_back("topology: duplicate cloud " + cloud.cloud_id);
    }
    if (techniques.count(cloud.technique_id) == 0) {
      diags.push_back("topology: cloud " + cloud.cloud_id +
                      " uses unknown technique " + cloud.technique_id);
    }
    if (cloud.max_services < 1) {
      diags.push_back("topology: cloud " + cloud.cloud_id + " max_services < 1");
    }
    if (!(cloud.clone_capacity > 0.0)) {
      diags.push_back("topology: cloud " + cloud.cloud_id + " clone_capacity <= 0");
    }
    if (cloud.services.empty() ||
        static_cast<int>(cloud.services.size()) > cloud.max_services) {
      diags.push_back("topology: cloud " + cloud.cloud_id +
                      " must hold between 1 and max_services services");
    }
    for (const auto& service : cloud.services) {
      if (service.service_id.empty()) diags.push_back("topology: empty service_id");
      if (!service_ids.insert(service.service_id).second) {
        diags.push_back("topology: duplicate service " + service.service_id);
      }
      if (!(service.capacity > 0.0)) {
        diags.push_back("topology: service " + service.service_id + " capacity <= 0");
      }
    }
  }

  Tick last_arrival = 0;
  std::set<core::ProductId> products;
  bool first = true;
  for (const auto& entry : scenario.requests) {
    if (entry.arrival_time < 0) {
      diags.push_back("requests: negative arrival_time");
    }
    if (!first && entry.arrival_time < last_arrival) {
      diags.push_back("requests: arrival times must be nondecreasing");
    }
    first = false;
    last_arrival = entry.arrival_time;
    const auto& product_id = entry.request.product.product_id;
    if (!products.insert(product_id).second) {
      diags.push_back("requests: duplicate product " + product_id);
    }
    try {
      core::validate_request(entry.request, scenario.catalog);
    } catch (const Error& e) {
      diags.push_back("request " + product_id + ": " + std::string(e.what()));
    }
  }

  for (const auto& injection : scenario.injections) {
    if (injection.time < 0) diags.push_back("injections: negative time");
    if (service_ids.count(injection.service_id) == 0) {
      diags.push_back("injections: unknown service " + injection.service_id);
    }
  }

  return diags;
}

core::Registry build_registry(const Scenario& scenario) {
  core::Registry registry;
  for (const auto& config : scenario.clouds) {
    core::TestingCloud cloud;
    cloud.cloud_id = config.cloud_id;
    cloud.technique_id = config.technique_id;
    cloud.max_services = config.max_services;
    for (const auto& service : config.services) {
      core::TestingService entry;
      entry.service_id = service.service_id;
      entry.technique_id = config.technique_id;
      entry.capacity = service.capacity;
      entry.state = core::ServiceState::free();
      cloud.services.push_back(std::move(entry));
    }
    alloc::add_cloud(registry, cloud);
  }
  return registry;
}

void to_json(nlohmann::json& j, const ServiceConfig& s) {
  j = nlohmann::json{{"service_id", s.service_id}, {"capacity", s.capacity}};
}

void from_json(const nlohmann::json& j, ServiceConfig& s) {
  j.at("service_id").get_to(s.service_id);
  s.capacity = j.value("capacity", 1.0);
}

void to_json(nlohmann::json& j, const CloudConfig& c) {
  j = nlohmann::json{{"cloud_id", c.cloud_id},
                     {"technique_id", c.technique_id},
                     {"max_services", c.max_services},
                     {"clone_capacity", c.clone_capacity},
                     {"services", c.services}};
}

void from_json(const nlohmann::json& j, CloudConfig& c) {
  j.at("cloud_id").get_to(c.cloud_id);
  j.at("technique_id").get_to(c.technique_id);
  j.at("max_services").get_to(c.max_services);
  c.clone_capacity = j.value("clone_capacity", 1.0);
  j.at("services").get_to(c.services);
}

void to_json(nlohmann::json& j, const RequestEntry& r) {
  j = nlohmann::json{{"arrival_time", r.arrival_time},
                     {"mode", std::string(sched::distribution_mode_name(r.mode))},
                     {"request", r.request}};
}

void from_json(const nlohmann::json& j, RequestEntry& r) {
  j.at("arrival_time").get_to(r.arrival_time);
  r.mode = sched::distribution_mode_from_name(j.value("mode", "lpt"));
  j.at("request").get_to(r.request);
}

void to_json(nlohmann::json& j, const Injection& i) {
  j = nlohmann::json{
      {"time", i.time},
      {"service_id", i.service_id},
      {"action", i.action == InjectionAction::kFail ? "fail" : "recover"}};
}

void from_json(const nlohmann::json& j, Injection& i) {
  j.at("time").get_to(i.time);
  j.at("service_id").get_to(i.service_id);
  const auto action = j.at("action").get<std::string>();
  if (action == "fail") {
    i.action = InjectionAction::kFail;
  } else if (action == "recover") {
    i.action = InjectionAction::kRecover;
  } else {
    throw_error(ErrorCode::kParseError, "action",
                "injection action must be fail or recover, got " + action);
  }
}

nlohmann::json scenario_to_json(const Scenario& scenario) {
  nlohmann::json j;
  j["version"] = "v1";
  j["kind"] = "scenario";
  j["seed"] = scenario.seed;
  j["latency"] = scenario.latency;
  j["max_retries"] = scenario.max_retries;
  j["retry_backoff"] = scenario.retry_backoff;
  j["catalog"] = scenario.catalog;
  j["topology"] = nlohmann::json{{"clouds", scenario.clouds}};
  j["requests"] = scenario.requests;
  j["failure_injections"] = scenario.injections;
  return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  if (j.value("version", "") != "v1") {
    throw_error(ErrorCode::kScenarioInvalid, "version",
                "unsupported scenario version: " + j.value("version", "<absent>"));
  }
  if (j.value("kind", "") != "scenario") {
    throw_error(ErrorCode::kScenarioInvalid, "kind",
                "file kind is not 'scenario': " + j.value("kind", "<absent>"));
  }
  Scenario scenario;
  try {
    scenario.seed = j.value("seed", 0ULL);
    scenario.latency = j.value("latency", Tick{1});
    scenario.max_retries = j.value("max_retries", 2);
    scenario.retry_backoff = j.value("retry_backoff", Tick{5});
    j.at("catalog").get_to(scenario.catalog);
    j.at("topology").at("clouds").get_to(scenario.clouds);
    j.at("requests").get_to(scenario.requests);
    if (j.contains("failure_injections")) {
      j.at("failure_injections").get_to(scenario.injections);
    }
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::kScenarioInvalid, "schema",
                std::string("malformed scenario: ") + e.what());
  }
  return scenario;
}

}  // namespace nimbus::sim
