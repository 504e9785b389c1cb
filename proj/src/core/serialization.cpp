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

#include "nimbus/core/serialization.hpp"

#include "nimbus/core/error.hpp"

namespace nimbus::core {

void to_json(json& j, const ModuleSpec& m) {
  j = json{{"module_id", m.module_id}, {"size_kloc", m.size_kloc}};
}

void from_json(const json& j, ModuleSpec& m) {
  j.at("module_id").get_to(m.module_id);
  j.at("size_kloc").get_to(m.size_kloc);
}

void to_json(json& j, const ProductSpec& p) {
  j = json{{"product_id", p.product_id},
           {"modules", p.modules},
           {"defect_density_estimate", p.defect_density_estimate}};
}

void from_json(const json& j, ProductSpec& p) {
  j.at("product_id").get_to(p.product_id);
  j.at("modules").get_to(p.modules);
  j.at("defect_density_estimate").get_to(p.defect_density_estimate);
}

void to_json(json& j, const ConsumerRequest& r) {
  j = json{{"product", r.product},
           {"deadline", r.deadline},
           {"techniques", r.techniques}};
}

void from_json(const json& j, ConsumerRequest& r) {
  j.at("product").get_to(r.product);
  j.at("deadline").get_to(r.deadline);
  j.at("techniques").get_to(r.techniques);
}

void to_json(json& j, const TechniqueSpec& t) {
  j = json{{"technique_id", t.technique_id},
           {"test_case_density", t.test_case_density},
           {"avg_case_time", t.avg_case_time},
           {"avg_case_size", t.avg_case_size}};
}

void from_json(const json& j, TechniqueSpec& t) {
  j.at("technique_id").get_to(t.technique_id);
  j.at("test_case_density").get_to(t.test_case_density);
  j.at("avg_case_time").get_to(t.avg_case_time);
  j.at("avg_case_size").get_to(t.avg_case_size);
}

void to_json(json& j, const ServiceState& s) {
  j = json{{"kind", std::string(service_state_name(s.kind))}};
  if (s.kind == ServiceStateKind::kLeased) j["leased_to"] = s.leased_to;
}

void from_json(const json& j, ServiceState& s) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "Free") {
    s = ServiceState::free();
  } else if (kind == "Leased") {
    s = ServiceState::leased(j.at("leased_to").get<ProductId>());
  } else if (kind == "Failed") {
    s = ServiceState::failed();
  } else {
    throw_error(ErrorCode::kParseError, "kind", "unknown service state " + kind);
  }
}

void to_json(json& j, const TestingService& s) {
  j = json{{"service_id", s.service_id},
           {"technique_id", s.technique_id},
           {"capacity", s.capacity},
           {"state", s.state}};
}

void from_json(const json& j, TestingService& s) {
  j.at("service_id").get_to(s.service_id);
  j.at("technique_id").get_to(s.technique_id);
  j.at("capacity").get_to(s.capacity);
  j.at("state").get_to(s.state);
}

void to_json(json& j, const TestingCloud& c) {
  j = json{{"cloud_id", c.cloud_id},
           {"technique_id", c.technique_id},
           {"services", c.services},
           {"max_services", c.max_services}};
}

void from_json(const json& j, TestingCloud& c) {
  j.at("cloud_id").get_to(c.cloud_id);
  j.at("technique_id").get_to(c.technique_id);
  j.at("services").get_to(c.services);
  j.at("max_services").get_to(c.max_services);
}

void to_json(json& j, const ProductAllocation& a) {
  j = json{{"product_id", a.product_id},
           {"manager_id", a.manager_id},
           {"cloud_ids", a.cloud_ids},
           {"service_ids", a.service_ids},
           {"cloud_count", a.cloud_count()}};
}

void from_json(const json& j, ProductAllocation& a) {
  j.at("product_id").get_to(a.product_id);
  j.at("manager_id").get_to(a.manager_id);
  j.at("cloud_ids").get_to(a.cloud_ids);
  j.at("service_ids").get_to(a.service_ids);
}

void to_json(json& j, const Registry& r) {
  j = json{{"managers", r.managers},
           {"clouds", json::object()},
           {"active_allocations", json::object()},
           {"active_products", r.active_product_count()}};
  for (const auto& [id, cloud] : r.clouds) j["clouds"][id] = cloud;
  for (const auto& [id, alloc] : r.active_allocations) {
    j["active_allocations"][id] = alloc;
  }
}

void from_json(const json& j, Registry& r) {
  r = Registry{};
  j.at("managers").get_to(r.managers);
  for (const auto& [id, cloud] : j.at("clouds").items()) {
    r.clouds[id] = cloud.get<TestingCloud>();
  }
  for (const auto& [id, alloc] : j.at("active_allocations").items()) {
    r.active_allocations[id] = alloc.get<ProductAllocation>();
  }
}

void to_json(json& j, const ValidatedRequest& v) {
  j = json{{"request", v.request}, {"resolved", v.resolved}};
}

void from_json(const json& j, ValidatedRequest& v) {
  j.at("request").get_to(v.request);
  j.at("resolved").get_to(v.resolved);
}

}  // namespace nimbus::core
