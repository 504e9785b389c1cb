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

#include "nimbus/fault/fault.hpp"

#include "nimbus/core/error.hpp"

namespace nimbus::fault {

std::string_view exception_kind_name(ExceptionKind kind) {
  switch (kind) {
    case ExceptionKind::kServiceFailure: return "ServiceFailure";
    case ExceptionKind::kTaskTimeout: return "TaskTimeout";
    case ExceptionKind::kAllocationConflict: return "AllocationConflict";
    case ExceptionKind::kOutputStandardViolation: return "OutputStandardViolation";
    case ExceptionKind::kTechniqueUnavailable: return "TechniqueUnavailable";
    case ExceptionKind::kDeadlineExceeded: return "DeadlineExceeded";
  }
  return "Unknown";
}

std::string_view recovery_action_name(RecoveryAction action) {
  switch (action) {
    case RecoveryAction::kRetry: return "Retry";
    case RecoveryAction::kReassign: return "Reassign";
    case RecoveryAction::kSpawnClone: return "SpawnClone";
    case RecoveryAction::kAbortTask: return "AbortTask";
    case RecoveryAction::kAbortCloud: return "AbortCloud";
    case RecoveryAction::kNone: return "None";
  }
  return "Unknown";
}

namespace {

ExceptionKind kind_from_name(const std::string& name) {
  if (name == "ServiceFailure") return ExceptionKind::kServiceFailure;
  if (name == "TaskTimeout") return ExceptionKind::kTaskTimeout;
  if (name == "AllocationConflict") return ExceptionKind::kAllocationConflict;
  if (name == "OutputStandardViolation") return ExceptionKind::kOutputStandardViolation;
  if (name == "TechniqueUnavailable") return ExceptionKind::kTechniqueUnavailable;
  if (name == "DeadlineExceeded") return ExceptionKind::kDeadlineExceeded;
  throw_error(ErrorCode::kParseError, name, "unknown exception kind " + name);
}

RecoveryAction action_from_name(const std::string& name) {
  if (name == "Retry") return RecoveryAction::kRetry;
  if (name == "Reassign") return RecoveryAction::kReassign;
  if (name == "SpawnClone") return RecoveryAction::kSpawnClone;
  if (name == "AbortTask") return RecoveryAction::kAbortTask;
  if (name == "AbortCloud") return RecoveryAction::kAbortCloud;
  if (name == "None") return RecoveryAction::kNone;
  throw_error(ErrorCode::kParseError, name, "unknown recovery action " + name);
}

}  // namespace

ExceptionKind classify(const RuntimeEvent& event) {
  switch (event.kind) {
    case RuntimeEventKind::kWorkerCrash: return ExceptionKind::kServiceFailure;
    case RuntimeEventKind::kTaskOverBudget: return ExceptionKind::kTaskTimeout;
    case RuntimeEventKind::kLeaseRace: return ExceptionKind::kAllocationConflict;
    case RuntimeEventKind::kNonconformingOutput:
      return ExceptionKind::kOutputStandardViolation;
    case RuntimeEventKind::kTechniqueMissing:
      return ExceptionKind::kTechniqueUnavailable;
    case RuntimeEventKind::kDeadlinePassed: return ExceptionKind::kDeadlineExceeded;
    case RuntimeEventKind::kUnknown: return ExceptionKind::kServiceFailure;
  }
  return ExceptionKind::kServiceFailure;
}

RecoveryAction decide_recovery(ExceptionKind kind, const RecoveryContext& ctx) {
  switch (kind) {
    case ExceptionKind::kServiceFailure:
      if (ctx.attempts >= ctx.max_retries) return RecoveryAction::kAbortTask;
      if (ctx.free_siblings > 0) return RecoveryAction::kReassign;
      if (ctx.cloud_size < ctx.max_services) return RecoveryAction::kSpawnClone;
      return RecoveryAction::kAbortCloud;
    case ExceptionKind::kTaskTimeout:
    case ExceptionKind::kOutputStandardViolation:
      return ctx.attempts < ctx.max_retries ? RecoveryAction::kRetry
                                            : RecoveryAction::kAbortTask;
    case ExceptionKind::kAllocationConflict:
    case ExceptionKind::kTechniqueUnavailable:
    case ExceptionKind::kDeadlineExceeded:
      return RecoveryAction::kAbortTask;
  }
  return RecoveryAction::kAbortTask;
}

void to_json(nlohmann::json& j, const FaultRecord& r) {
  j = nlohmann::json{{"time", r.time},
                     {"kind", std::string(exception_kind_name(r.kind))},
                     {"subject", r.subject},
                     {"action", std::string(recovery_action_name(r.action))},
                     {"attempt", r.attempt},
                     {"product_id", r.product_id}};
}

void from_json(const nlohmann::json& j, FaultRecord& r) {
  j.at("time").get_to(r.time);
  r.kind = kind_from_name(j.at("kind").get<std::string>());
  j.at("subject").get_to(r.subject);
  r.action = action_from_name(j.at("action").get<std::string>());
  j.at("attempt").get_to(r.attempt);
  j.at("product_id").get_to(r.product_id);
}

}  // namespace nimbus::fault
