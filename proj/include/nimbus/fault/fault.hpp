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

#include <string>

#include <nlohmann/json.hpp>

#include "nimbus/core/types.hpp"

// Exception taxonomy and recovery policy: classification of runtime events
// and deterministic recovery decisions. Decision functions are pure; the
// fault log is single-writer (the event loop).

namespace nimbus::fault {

using core::Tick;

// Every runtime fault event maps to exactly one kind.
enum class ExceptionKind {
  kServiceFailure,
  kTaskTimeout,
  kAllocationConflict,
  kOutputStandardViolation,
  kTechniqueUnavailable,
  kDeadlineExceeded,
};

// What the policy decides. kNone is recorded for purely informational fault
// records (e.g. a missed deadline, which never aborts in-flight work);
// decide_recovery itself never returns it.
enum class RecoveryAction {
  kRetry,       // same service
  kReassign,    // sibling service
  kSpawnClone,  // then reassign
  kAbortTask,
  kAbortCloud,
  kNone,
};

std::string_view exception_kind_name(ExceptionKind kind);
std::string_view recovery_action_name(RecoveryAction action);

// Raw observations the engine feeds to classify().
enum class RuntimeEventKind {
  kWorkerCrash,          // service stopped mid-task or was failed by injection
  kTaskOverBudget,       // no report by 2x est_duration
  kLeaseRace,            // allocate detected a competing lease
  kNonconformingOutput,  // report missing required output-standard fields
  kTechniqueMissing,     // no cloud can serve a requested technique
  kDeadlinePassed,       // product deadline elapsed with work outstanding
  kUnknown,
};

struct RuntimeEvent {
  RuntimeEventKind kind = RuntimeEventKind::kUnknown;
  std::string subject;  // service / task / cloud id

  friend bool operator==(const RuntimeEvent&, const RuntimeEvent&) = default;
};

// Context for one recovery decision.
struct RecoveryContext {
  int attempts = 0;       // prior recovery decisions for this task
  int free_siblings = 0;  // non-failed sibling services in the cloud
  int cloud_size = 0;     // services currently registered in the cloud
  int max_services = 1;   // the cloud's clone cap
  int max_retries = 2;

  friend bool operator==(const RecoveryContext&, const RecoveryContext&) = default;
};

// Append-only log entry; appears verbatim in the FinalReport exception log
// and in the trace file.
struct FaultRecord {
  Tick time = 0;
  ExceptionKind kind = ExceptionKind::kServiceFailure;
  std::string subject;
  RecoveryAction action = RecoveryAction::kNone;
  int attempt = 0;
  core::ProductId product_id;

  friend bool operator==(const FaultRecord&, const FaultRecord&) = default;
};

// Total mapping from runtime events to the taxonomy; unknown events map to
// ServiceFailure conservatively.
ExceptionKind classify(const RuntimeEvent& event);

// Deterministic policy table. Total over every (kind, context) pair:
//   TaskTimeout / OutputStandardViolation: Retry while attempts <
//     max_retries, then AbortTask.
//   ServiceFailure: AbortTask once attempts are exhausted; otherwise
//     Reassign if a live sibling exists, SpawnClone if the cloud has
//     headroom, else AbortCloud (every service in the cloud is down).
//   Everything else: AbortTask. Conflict retry and deadline flagging are
//     handled by the negotiation and reporting layers, not here.
RecoveryAction decide_recovery(ExceptionKind kind, const RecoveryContext& ctx);

void to_json(nlohmann::json& j, const FaultRecord& r);
void from_json(const nlohmann::json& j, FaultRecord& r);

}  // namespace nimbus::fault
