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

#include "nimbus/core/types.hpp"

#include <algorithm>

#include "nimbus/core/error.hpp"

namespace nimbus::core {

std::string_view service_state_name(ServiceStateKind kind) {
  switch (kind) {
    case ServiceStateKind::kFree: return "Free";
    case ServiceStateKind::kLeased: return "Leased";
    case ServiceStateKind::kFailed: return "Failed";
  }
  return "Unknown";
}

const TestingService* TestingCloud::find_service(const ServiceId& id) const {
  for (const auto& s : services) {
    if (s.service_id == id) return &s;
  }
  return nullptr;
}

TestingService* TestingCloud::find_service(const ServiceId& id) {
  for (auto& s : services) {
    if (s.service_id == id) return &s;
  }
  return nullptr;
}

int TestingCloud::free_service_count() const {
  return static_cast<int>(std::count_if(
      services.begin(), services.end(),
      [](const TestingService& s) { return s.state.is_free(); }));
}

const TestingCloud* Registry::find_cloud(const CloudId& id) const {
  auto it = clouds.find(id);
  return it == clouds.end() ? nullptr : &it->second;
}

TestingCloud* Registry::find_cloud(const CloudId& id) {
  auto it = clouds.find(id);
  return it == clouds.end() ? nullptr : &it->second;
}

const TestingCloud* Registry::cloud_of_service(const ServiceId& id) const {
  for (const auto& [cid, cloud] : clouds) {
    if (cloud.find_service(id) != nullptr) return &cloud;
  }
  return nullptr;
}

TestingCloud* Registry::cloud_of_service(const ServiceId& id) {
  for (auto& [cid, cloud] : clouds) {
    if (cloud.find_service(id) != nullptr) return &cloud;
  }
  return nullptr;
}

const TechniqueSpec& ValidatedRequest::spec_for(const TechniqueId& id) const {
  for (const auto& spec : resolved) {
    if (spec.technique_id == id) return spec;
  }
  throw_error(ErrorCode::kUnknownTechnique, id,
              "technique not resolved in validated request: " + id);
}

}  // namespace nimbus::core
