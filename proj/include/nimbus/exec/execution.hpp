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

#include "nimbus/core/types.hpp"
#include "nimbus/sched/scheduler.hpp"

// Testing Service worker logic: runs assigned tasks through a pluggable
// runner and emits Environmental Partial Test Reports.

namespace nimbus::exec {

using core::ServiceId;
using core::TaskId;
using core::Tick;

// One service's per-task result. Every EPTR carries the three fields of the
// output standard: cases executed, defects found, time spent.
struct Eptr {
  ServiceId service_id;
  TaskId task_id;
  std::int64_t cases_executed = 0;
  std::int64_t defects_found = 0;  // <= cases_executed
  Tick time_spent = 0;
  Tick finished_at = 0;

  friend bool operator==(const Eptr&, const Eptr&) = default;
};

// Execution parameters a runner needs beside the task itself.
struct RunnerContext {
  ServiceId service_id;
  double capacity = 1.0;
  Tick avg_case_time = 1;
  std::uint64_t seed = 0;
  double defect_density = 0.0;  // defects per kloc
  Tick started_at = 0;
};

class Runner {
 public:
  virtual ~Runner() = default;
  // Must be deterministic given (task, ctx.seed) in simulation mode.
  virtual Eptr run(const sched::TestTask& task, const RunnerContext& ctx) = 0;
};

// Wall time a service needs for a task: case_count * avg_case_time scaled by
// capacity, rounded up to whole ticks.
Tick task_run_time(const sched::TestTask& task, Tick avg_case_time,
                   double capacity);

// SplitMix64 step; the generator behind the simulated runner. Bit-exact
// across platforms.
std::uint64_t splitmix64_next(std::uint64_t& state);

// FNV-1a 64-bit, used to fold task ids into the defect-draw seed.
std::uint64_t fnv1a64(std::string_view bytes);

// Desk-scale stand-in for real testing. Draws one SplitMix64 value per case
// from a generator seeded with seed XOR fnv1a64(task_id); case k finds a
// defect iff next() mod 10000 < round(p * 10000), where
// p = min(1, defect_density * size_kloc / case_count).
class SimulatedRunner : public Runner {
 public:
  Eptr run(const sched::TestTask& task, const RunnerContext& ctx) override;
};

// Invokes a user-supplied program per task: the task is serialized as JSON
// on stdin; the program must print "EPTR <cases> <defects> <millis>" and
// exit 0. Excluded from deterministic acceptance.
class ExternalRunner : public Runner {
 public:
  explicit ExternalRunner(std::string command) : command_(std::move(command)) {}
  Eptr run(const sched::TestTask& task, const RunnerContext& ctx) override;

 private:
  std::string command_;
};

// Executes one task on a leased service. Precondition: the service is
// Leased to the task's product; otherwise Error(kServiceFailure). The
// returned EPTR has finished_at = ctx.started_at + time_spent.
Eptr run_task(const sched::TestTask& task, Runner& runner,
              const core::TestingService& service, const RunnerContext& ctx);

}  // namespace nimbus::exec
