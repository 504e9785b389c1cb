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
#include <map>
#include <set>
#include <string>
#include <vector>

namespace nimbus::core {

// Simulated time is integer ticks; durations round up. Real-runner mode uses
// the same integer type carrying milliseconds.
using Tick = std::int64_t;

// Identifiers are opaque strings; where a deterministic order is needed the
// tie-break is lexicographic byte order.
using ProductId = std::string;
using ModuleId = std::string;
using TechniqueId = std::string;
using ServiceId = std::string;
using CloudId = std::string;
using ManagerId = std::string;
using TaskId = std::string;

struct ModuleSpec {
  ModuleId module_id;
  double size_kloc = 0.0;  // declared size, must be > 0

  friend bool operator==(const ModuleSpec&, const ModuleSpec&) = default;
};

// The product under test (P_i). Size is declared, never measured.
struct ProductSpec {
  ProductId product_id;
  std::vector<ModuleSpec> modules;
  // Expected defects per kloc; consumed only by the simulated runner.
  double defect_density_estimate = 0.0;

  friend bool operator==(const ProductSpec&, const ProductSpec&) = default;
};

// What the consumer submits: product, time budget, and the required
// techniques (ordered, no duplicates).
struct ConsumerRequest {
  ProductSpec product;
  Tick deadline = 0;
  std::vector<TechniqueId> techniques;

  friend bool operator==(const ConsumerRequest&, const ConsumerRequest&) = default;
};

// Per-technique estimate parameters used for workload prediction.
struct TechniqueSpec {
  TechniqueId technique_id;
  double test_case_density = 0.0;  // test cases per kloc, > 0
  Tick avg_case_time = 0;          // ticks to generate-and-execute one case, > 0
  double avg_case_size = 0.0;      // informational only, > 0

  friend bool operator==(const TechniqueSpec&, const TechniqueSpec&) = default;
};

enum class ServiceStateKind { kFree, kLeased, kFailed };

std::string_view service_state_name(ServiceStateKind kind);

struct ServiceState {
  ServiceStateKind kind = ServiceStateKind::kFree;
  ProductId leased_to;  // set iff kind == kLeased

  static ServiceState free() { return {ServiceStateKind::kFree, {}}; }
  static ServiceState leased(ProductId product) {
    return {ServiceStateKind::kLeased, std::move(product)};
  }
  static ServiceState failed() { return {ServiceStateKind::kFailed, {}}; }

  bool is_free() const { return kind == ServiceStateKind::kFree; }
  bool is_failed() const { return kind == ServiceStateKind::kFailed; }
  bool is_leased_to(const ProductId& product) const {
    return kind == ServiceStateKind::kLeased && leased_to == product;
  }

  friend bool operator==(const ServiceState&, const ServiceState&) = default;
};

// A worker (possibly a spawned clone) executing test tasks for one technique.
// Legal state transitions: Free->Leased, Leased->Free, any->Failed,
// Failed->Free. State is mutated only by the allocation module.
struct TestingService {
  ServiceId service_id;
  TechniqueId technique_id;
  double capacity = 1.0;  // test-case-units processed per tick, > 0
  ServiceState state;

  friend bool operator==(const TestingService&, const TestingService&) = default;
};

// A technique-specific pool of services, leased exclusively to one product at
// a time. max_services is the clone cap K.
struct TestingCloud {
  CloudId cloud_id;
  TechniqueId technique_id;
  std::vector<TestingService> services;
  int max_services = 1;

  const TestingService* find_service(const ServiceId& id) const;
  TestingService* find_service(const ServiceId& id);
  int free_service_count() const;

  friend bool operator==(const TestingCloud&, const TestingCloud&) = default;
};

// The lease record: one manager binding plus the clouds (and the member
// services actually leased) granted to a product.
struct ProductAllocation {
  ProductId product_id;
  ManagerId manager_id;
  std::vector<CloudId> cloud_ids;      // one per requested technique
  std::vector<ServiceId> service_ids;  // leased members across all clouds

  int cloud_count() const { return static_cast<int>(cloud_ids.size()); }

  friend bool operator==(const ProductAllocation&, const ProductAllocation&) = default;
};

// Central directory of managers, clouds and active leases. Mutated only
// through the allocation module under its single-writer contract.
struct Registry {
  std::set<ManagerId> managers;
  std::map<CloudId, TestingCloud> clouds;
  std::map<ProductId, ProductAllocation> active_allocations;

  int active_product_count() const {
    return static_cast<int>(active_allocations.size());
  }

  const TestingCloud* find_cloud(const CloudId& id) const;
  TestingCloud* find_cloud(const CloudId& id);
  // Cloud owning the given service, or nullptr.
  const TestingCloud* cloud_of_service(const ServiceId& id) const;
  TestingCloud* cloud_of_service(const ServiceId& id);

  friend bool operator==(const Registry&, const Registry&) = default;
};

// A request whose techniques have been resolved against the catalog; the
// resolved specs are ordered like request.techniques.
struct ValidatedRequest {
  ConsumerRequest request;
  std::vector<TechniqueSpec> resolved;

  const TechniqueSpec& spec_for(const TechniqueId& id) const;

  friend bool operator==(const ValidatedRequest&, const ValidatedRequest&) = default;
};

}  // namespace nimbus::core
