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

#include "nimbus/core/types.hpp"

// Workload estimation, clone sizing, and load partitioning. Everything here
// is pure computation, safe to call from any context.

namespace nimbus::sched {

using core::ModuleId;
using core::ServiceId;
using core::TaskId;
using core::Tick;

// Predicted work for one (product, technique) pair. The prediction model is
// linear in declared module size: cases(m) = ceil(size_kloc(m) * density).
struct WorkloadEstimate {
  std::map<ModuleId, std::int64_t> per_module_cases;
  std::int64_t total_cases = 0;
  Tick total_time = 0;  // total_cases * avg_case_time at unit capacity

  friend bool operator==(const WorkloadEstimate&, const WorkloadEstimate&) = default;
};

// The unit of distributable work: one module's cases for one technique, or a
// chunk of them when the module alone exceeds the deadline.
struct TestTask {
  TaskId task_id;
  core::ProductId product_id;
  ModuleId module_id;
  std::int64_t case_count = 0;  // >= 1
  Tick est_duration = 0;        // case_count * avg_case_time
  double size_kloc = 0.0;       // kloc covered by this task

  friend bool operator==(const TestTask&, const TestTask&) = default;
};

enum class DistributionMode { kRoundRobin, kWeightedByCapacity, kLpt };

std::string_view distribution_mode_name(DistributionMode mode);
DistributionMode distribution_mode_from_name(const std::string& name);

struct ServiceSlot {
  ServiceId service_id;
  double capacity = 1.0;

  friend bool operator==(const ServiceSlot&, const ServiceSlot&) = default;
};

// Result of partition_load: every input task appears in exactly one
// service's ordered list.
struct Assignment {
  std::map<ServiceId, std::vector<TestTask>> by_service;
  DistributionMode mode = DistributionMode::kLpt;

  std::int64_t total_case_count() const;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct ClonePlan {
  int count = 1;        // services needed, in [1, max_services]
  bool feasible = true; // count * deadline covers total_time at unit capacity

  friend bool operator==(const ClonePlan&, const ClonePlan&) = default;
};

// Linear-density workload prediction for a validated product.
WorkloadEstimate estimate_workload(const core::ProductSpec& product,
                                   const core::TechniqueSpec& technique);

// Builds the task list for one (product, technique): one task per module,
// split into at most ceil(cases/32) chunks when the module alone exceeds the
// deadline. Task ids are "<product>/<technique>/<module>" plus "#k" when
// chunked.
std::vector<TestTask> make_tasks(const core::ProductSpec& product,
                                 const core::TechniqueSpec& technique,
                                 Tick deadline);

// Clone sizing: count = min(max_services, max(1, ceil(total_time/deadline)))
// assuming unit capacity. Infeasible deadlines are surfaced as a warning in
// the plan, never an error.
ClonePlan decide_clone_count(const WorkloadEstimate& estimate, Tick deadline,
                             const core::TestingCloud& cloud);

// Distributes tasks across services under the selected mode:
//  - RoundRobin: input order dealt cyclically over the services as given.
//  - WeightedByCapacity: each task (input order) to the service with minimum
//    assigned_duration / capacity; ties keep the earliest service.
//  - Lpt: tasks by est_duration descending (tie task_id ascending), each to
//    the least-loaded service (tie service_id ascending).
// Errors: kNoServices if services is empty.
Assignment partition_load(const std::vector<TestTask>& tasks,
                          const std::vector<ServiceSlot>& services,
                          DistributionMode mode);

}  // namespace nimbus::sched
