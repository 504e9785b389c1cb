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

#include "nimbus/sched/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "nimbus/core/error.hpp"

namespace nimbus::sched {

namespace {

Tick ceil_div(Tick a, Tick b) { return (a + b - 1) / b; }

std::int64_t cases_for_module(double size_kloc, double density) {
  const auto cases = static_cast<std::int64_t>(std::ceil(size_kloc * density));
  // A nonempty module never rounds down to zero work.
  return std::max<std::int64_t>(cases, 1);
}

}  // namespace

std::string_view distribution_mode_name(DistributionMode mode) {
  switch (mode) {
    case DistributionMode::kRoundRobin: return "round_robin";
    case DistributionMode::kWeightedByCapacity: return "weighted";
    case DistributionMode::kLpt: return "lpt";
  }
  return "unknown";
}

DistributionMode distribution_mode_from_name(const std::string& name) {
  if (name == "round_robin") return DistributionMode::kRoundRobin;
  if (name == "weighted") return DistributionMode::kWeightedByCapacity;
  if (name == "lpt") return DistributionMode::kLpt;
  throw_error(ErrorCode::kParseError, name, "unknown distribution mode " + name);
}

std::int64_t Assignment::total_case_count() const {
  std::int64_t total = 0;
  for (const auto& [sid, tasks] : by_service) {
    for (const auto& task : tasks) total += task.case_count;
  }
  return total;
}

WorkloadEstimate estimate_workload(const core::ProductSpec& product,
                                   const core::TechniqueSpec& technique) {
  WorkloadEstimate estimate;
  for (const auto& module : product.modules) {
    const auto cases = cases_for_module(module.size_kloc, technique.test_case_density);
    estimate.per_module_cases[module.module_id] = cases;
    estimate.total_cases += cases;
  }
  estimate.total_time = estimate.total_cases * technique.avg_case_time;
  return estimate;
}

std::vector<TestTask> make_tasks(const core::ProductSpec& product,
                                 const core::TechniqueSpec& technique,
                                 Tick deadline) {
  std::vector<TestTask> tasks;
  for (const auto& module : product.modules) {
    const auto cases = cases_for_module(module.size_kloc, technique.test_case_density);
    const Tick est = cases * technique.avg_case_time;

    std::int64_t chunks = 1;
    if (deadline > 0 && est > deadline) {
      // Split a module that alone exceeds the deadline, but never into more
      // than ceil(cases/32) chunks.
      chunks = std::min<std::int64_t>(ceil_div(est, deadline),
                                      (cases + 31) / 32);
      chunks = std::max<std::int64_t>(chunks, 1);
    }

    const std::int64_t base = cases / chunks;
    const std::int64_t rem = cases % chunks;
    for (std::int64_t k = 0; k < chunks; ++k) {
      TestTask task;
      task.product_id = product.product_id;
      task.module_id = module.module_id;
      task.task_id = product.product_id + "/" + technique.technique_id + "/" +
                     module.module_id +
                     (chunks == 1 ? "" : "#" + std::to_string(k));
      task.case_count = base + (k < rem ? 1 : 0);
      task.est_duration = task.case_count * technique.avg_case_time;
      task.size_kloc = module.size_kloc * static_cast<double>(task.case_count) /
                       static_cast<double>(cases);
      tasks.push_back(std::move(task));
    }
  }
  return tasks;
}

ClonePlan decide_clone_count(const WorkloadEstimate& estimate, Tick deadline,
                             const core::TestingCloud& cloud) {
  ClonePlan plan;
  const Tick needed = deadline > 0 ? ceil_div(estimate.total_time, deadline) : 1;
  plan.count = static_cast<int>(
      std::min<Tick>(cloud.max_services, std::max<Tick>(1, needed)));
  plan.feasible = static_cast<Tick>(plan.count) * deadline >= estimate.total_time;
  return plan;
}

Assignment partition_load(const std::vector<TestTask>& tasks,
                          const std::vector<ServiceSlot>& services,
                          DistributionMode mode) {
  if (services.empty()) {
    throw_error(ErrorCode::kNoServices, "services", "cannot partition over zero services");
  }
  Assignment assignment;
  assignment.mode = mode;
  for (const auto& slot : services) assignment.by_service[slot.service_id];

  switch (mode) {
    case DistributionMode::kRoundRobin: {
      std::size_t next = 0;
      for (const auto& task : tasks) {
        assignment.by_service[services[next].service_id].push_back(task);
        next = (next + 1) % services.size();
      }
      break;
    }
    case DistributionMode::kWeightedByCapacity: {
      std::vector<Tick> assigned(services.size(), 0);
      for (const auto& task : tasks) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < services.size(); ++i) {
          const double lhs = static_cast<double>(assigned[i]) / services[i].capacity;
          const double rhs =
              static_cast<double>(assigned[best]) / services[best].capacity;
          if (lhs < rhs) best = i;
        }
        assigned[best] += task.est_duration;
        assignment.by_service[services[best].service_id].push_back(task);
      }
      break;
    }
    case DistributionMode::kLpt: {
      std::vector<TestTask> ordered = tasks;
      std::sort(ordered.begin(), ordered.end(),
                [](const TestTask& a, const TestTask& b) {
                  if (a.est_duration != b.est_duration) {
                    return a.est_duration > b.est_duration;
                  }
                  return a.task_id < b.task_id;
                });
      // Least-loaded first, ties by service id: sort slots by id once so the
      // scan below resolves ties lexicographically.
      std::vector<ServiceSlot> slots = services;
      std::sort(slots.begin(), slots.end(),
                [](const ServiceSlot& a, const ServiceSlot& b) {
                  return a.service_id < b.service_id;
                });
      std::vector<Tick> load(slots.size(), 0);
      for (const auto& task : ordered) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < slots.size(); ++i) {
          if (load[i] < load[best]) best = i;
        }
        load[best] += task.est_duration;
        assignment.by_service[slots[best].service_id].push_back(task);
      }
      break;
    }
  }
  return assignment;
}

}  // namespace nimbus::sched
