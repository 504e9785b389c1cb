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

#include "nimbus/exec/execution.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nimbus/core/error.hpp"

namespace nimbus::exec {

Tick task_run_time(const sched::TestTask& task, Tick avg_case_time,
                   double capacity) {
  const double work = static_cast<double>(task.case_count) *
                      static_cast<double>(avg_case_time);
  return static_cast<Tick>(std::ceil(work / capacity));
}

std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

Eptr SimulatedRunner::run(const sched::TestTask& task, const RunnerContext& ctx) {
  Eptr eptr;
  eptr.service_id = ctx.service_id;
  eptr.task_id = task.task_id;
  eptr.cases_executed = task.case_count;

  double p = 0.0;
  if (task.case_count > 0) {
    p = ctx.defect_density * task.size_kloc / static_cast<double>(task.case_count);
    p = std::min(p, 1.0);
    p = std::max(p, 0.0);
  }
  const std::uint64_t threshold =
      static_cast<std::uint64_t>(std::llround(p * 10000.0));

  std::uint64_t state = ctx.seed ^ fnv1a64(task.task_id);
  for (std::int64_t k = 0; k < task.case_count; ++k) {
    if (splitmix64_next(state) % 10000ULL < threshold) {
      ++eptr.defects_found;
    }
  }

  eptr.time_spent = task_run_time(task, ctx.avg_case_time, ctx.capacity);
  eptr.finished_at = ctx.started_at + eptr.time_spent;
  return eptr;
}

Eptr ExternalRunner::run(const sched::TestTask& task, const RunnerContext& ctx) {
  nlohmann::json payload = {
      {"task_id", task.task_id},     {"product_id", task.product_id},
      {"module_id", task.module_id}, {"case_count", task.case_count},
      {"est_duration", task.est_duration}, {"size_kloc", task.size_kloc},
  };
  // Feed the task on stdin via a shell pipeline; read the one-line record.
  const std::string shell =
      "printf '%s' '" + payload.dump() + "' | " + command_;
  FILE* pipe = popen(shell.c_str(), "r");
  if (pipe == nullptr) {
    throw_error(ErrorCode::kRunnerError, task.task_id,
                "failed to launch runner: " + command_);
  }
  std::string output;
  char buf[256];
  while (fgets(buf, sizeof buf, pipe) != nullptr) output += buf;
  const int status = pclose(pipe);
  if (status != 0) {
    throw_error(ErrorCode::kRunnerError, task.task_id,
                "runner exited with status " + std::to_string(status));
  }

  std::istringstream line(output);
  std::string tag;
  std::int64_t cases = 0, defects = 0, millis = 0;
  if (!(line >> tag >> cases >> defects >> millis) || tag != "EPTR") {
    throw_error(ErrorCode::kRunnerError, task.task_id,
                "malformed runner output: " + output);
  }
  if (cases < 0 || defects < 0 || defects > cases || millis < 0) {
    throw_error(ErrorCode::kRunnerError, task.task_id,
                "runner output violates report invariants: " + output);
  }

  Eptr eptr;
  eptr.service_id = ctx.service_id;
  eptr.task_id = task.task_id;
  eptr.cases_executed = cases;
  eptr.defects_found = defects;
  eptr.time_spent = millis;
  eptr.finished_at = ctx.started_at + millis;
  return eptr;
}

Eptr run_task(const sched::TestTask& task, Runner& runner,
              const core::TestingService& service, const RunnerContext& ctx) {
  if (!service.state.is_leased_to(task.product_id)) {
    throw_error(ErrorCode::kServiceFailure, service.service_id,
                "service " + service.service_id + " is not leased to product " +
                    task.product_id);
  }
  if (task.case_count < 1) {
    throw_error(ErrorCode::kInvalidField, "case_count",
                "task " + task.task_id + " has no cases");
  }
  Eptr eptr = runner.run(task, ctx);
  if (eptr.defects_found > eptr.cases_executed || eptr.time_spent < 0) {
    throw_error(ErrorCode::kRunnerError, task.task_id,
                "runner produced an invalid report for task " + task.task_id);
  }
  return eptr;
}

}  // namespace nimbus::exec
