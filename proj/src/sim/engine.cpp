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

#include "nimbus/sim/engine.hpp"

#include <algorithm>
#include <deque>
#include <optional>
#include <queue>
#include <sstream>
#include <variant>

#include "nimbus/alloc/allocation.hpp"
#include "nimbus/core/error.hpp"
#include "nimbus/core/validate.hpp"
#include "nimbus/exec/execution.hpp"

namespace nimbus::sim {

namespace {

using alloc::CloudProposal;
using core::CloudId;
using core::ProductId;
using core::ServiceId;
using core::TaskId;
using core::TechniqueId;
using sched::TestTask;

// --- protocol payloads -----------------------------------------------------

struct RequestArrival {  // consumer -> manager, logs as RequestTesting
  ProductId product_id;
};

struct ForwardRequest {  // manager -> registry, logs as RequestTesting
  ProductId product_id;
  core::ValidatedRequest vreq;
};

struct ProposeCloudMsg {  // registry -> manager
  ProductId product_id;
  std::vector<CloudProposal> proposals;
};

struct AcceptProposalMsg {  // manager -> registry
  ProductId product_id;
  std::vector<CloudProposal> proposals;
  std::map<TechniqueId, sched::WorkloadEstimate> estimates;
  Tick deadline = 0;
};

struct CloudGrant {
  CloudId cloud_id;
  TechniqueId technique_id;
  std::vector<sched::ServiceSlot> services;
  bool feasible = true;
};

struct LeaseGrantMsg {  // registry -> manager, logs as AcceptProposal
  ProductId product_id;
  std::vector<CloudGrant> clouds;
  Tick granted_at = 0;
};

struct RejectProposalMsg {  // registry -> manager
  ProductId product_id;
  ErrorCode reason = ErrorCode::kNoCapacity;
  std::string subject;
  bool retry_hint = false;
};

struct AssignTaskMsg {  // manager -> service
  ServiceId service_id;
  TestTask task;
};

struct EptrMsg {  // service -> manager
  ProductId product_id;
  exec::Eptr eptr;
};

struct EtrMsg {  // manager -> consumer
  ProductId product_id;
  agg::Etr etr;
};

struct FailureNoticeMsg {  // failing service -> owning manager
  ProductId product_id;
  ServiceId service_id;
  std::optional<TaskId> in_flight;
  std::vector<TaskId> queued;
};

struct ReleaseLeaseMsg {  // manager -> registry
  ProductId product_id;
};

struct InjectFailureMsg {
  ServiceId service_id;
};

struct RecoverMsg {
  ServiceId service_id;
};

enum class TimerKind { kTaskDone, kTaskTimeout, kNegotiationRetry };

struct TimerFireMsg {  // local timer, never crosses the network
  TimerKind kind = TimerKind::kTaskDone;
  ProductId product_id;
  ServiceId service_id;
  TaskId task_id;
  std::int64_t incarnation = 0;
};

using Payload =
    std::variant<RequestArrival, ForwardRequest, ProposeCloudMsg,
                 AcceptProposalMsg, LeaseGrantMsg, RejectProposalMsg,
                 AssignTaskMsg, EptrMsg, EtrMsg, FailureNoticeMsg,
                 ReleaseLeaseMsg, InjectFailureMsg, RecoverMsg, TimerFireMsg>;

std::string payload_type_name(const Payload& payload) {
  struct Namer {
    std::string operator()(const RequestArrival&) { return "RequestTesting"; }
    std::string operator()(const ForwardRequest&) { return "RequestTesting"; }
    std::string operator()(const ProposeCloudMsg&) { return "ProposeCloud"; }
    std::string operator()(const AcceptProposalMsg&) { return "AcceptProposal"; }
    std::string operator()(const LeaseGrantMsg&) { return "AcceptProposal"; }
    std::string operator()(const RejectProposalMsg&) { return "RejectProposal"; }
    std::string operator()(const AssignTaskMsg&) { return "AssignTask"; }
    std::string operator()(const EptrMsg&) { return "EPTRMsg"; }
    std::string operator()(const EtrMsg&) { return "ETRMsg"; }
    std::string operator()(const FailureNoticeMsg&) { return "FailureNotice"; }
    std::string operator()(const ReleaseLeaseMsg&) { return "ReleaseLease"; }
    std::string operator()(const InjectFailureMsg&) { return "InjectFailure"; }
    std::string operator()(const RecoverMsg&) { return "Recover"; }
    std::string operator()(const TimerFireMsg&) { return "TimerFire"; }
  };
  return std::visit(Namer{}, payload);
}

struct Event {
  Tick send = 0;
  Tick deliver = 0;
  std::int64_t seq = 0;
  std::string from;
  std::string to;
  Payload payload;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.deliver != b.deliver) return a.deliver > b.deliver;
    return a.seq > b.seq;
  }
};

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ",") + id;
  return out;
}

// --- the engine -------------------------------------------------------------

class Engine {
 public:
  explicit Engine(const Scenario& scenario) : scenario_(scenario) {}

  SimResult run();

 private:
  enum class Phase { kNegotiating, kAccepting, kWaitingRetry, kRunning, kDone, kRejected };

  struct ActiveRun {
    TestTask task;
    Tick started = 0;
    Tick run_time = 0;
  };

  struct ServiceRt {
    CloudId cloud_id;
    std::int64_t incarnation = 0;
    bool failed = false;
    Tick born = 0;
    Tick fail_start = 0;
    Tick busy_accum = 0;
    Tick failed_accum = 0;
    std::optional<ActiveRun> active;
    std::deque<TestTask> queue;

    Tick pending_work() const {
      Tick total = active ? active->task.est_duration : 0;
      for (const auto& t : queue) total += t.est_duration;
      return total;
    }
  };

  struct TaskRt {
    TestTask task;
    CloudId cloud_id;
    TechniqueId technique_id;
    int attempts = 0;
    int executions = 0;
    std::string status = "pending";  // pending | running | completed | aborted
  };

  struct CloudRun {
    TechniqueId technique_id;
    std::set<TaskId> outstanding;
    std::vector<exec::Eptr> eptrs;
    bool aborted = false;
    bool finalized = false;
    bool feasible = true;
  };

  struct Sm {
    core::ConsumerRequest request;
    core::ValidatedRequest vreq;
    sched::DistributionMode mode = sched::DistributionMode::kLpt;
    Phase phase = Phase::kNegotiating;
    int nego_attempts = 0;
    Tick granted_at = 0;
    std::vector<CloudId> cloud_order;
    std::map<CloudId, CloudRun> clouds;
    std::map<TaskId, TaskRt> tasks;
    std::vector<fault::FaultRecord> faults;
    std::vector<agg::Etr> etrs;
  };

  // addresses
  static std::string consumer_addr(const ProductId& p) { return "cs:" + p; }
  static std::string manager_addr(const ProductId& p) { return "sm:" + p; }
  static std::string service_addr(const ServiceId& s) { return "svc:" + s; }

  void enqueue(Tick send, Tick deliver, std::string from, std::string to,
               Payload payload) {
    queue_.push(Event{send, deliver, next_seq_++, std::move(from), std::move(to),
                      std::move(payload)});
  }
  // One network hop.
  void post(const std::string& from, const std::string& to, Payload payload) {
    enqueue(now_, now_ + scenario_.latency, from, to, std::move(payload));
  }
  // Local timer/event at an absolute time.
  void post_local(const std::string& at, Tick when, Payload payload) {
    enqueue(when, when, at, at, std::move(payload));
  }

  fault::FaultRecord& record_fault(fault::ExceptionKind kind, std::string subject,
                                   fault::RecoveryAction action, int attempt,
                                   const ProductId& product) {
    fault::FaultRecord record;
    record.time = now_;
    record.kind = kind;
    record.subject = std::move(subject);
    record.action = action;
    record.attempt = attempt;
    record.product_id = product;
    result_.fault_records.push_back(record);
    if (!product.empty()) {
      auto it = sms_.find(product);
      if (it != sms_.end()) it->second.faults.push_back(record);
    }
    return result_.fault_records.back();
  }

  double clone_capacity_of(const CloudId& cloud_id) const {
    for (const auto& config : scenario_.clouds) {
      if (config.cloud_id == cloud_id) return config.clone_capacity;
    }
    return 1.0;
  }

  const core::TechniqueSpec& technique_spec(const Sm& sm, const TechniqueId& id) {
    return sm.vreq.spec_for(id);
  }

  std::map<ServiceId, CloudId> service_cloud_map() const {
    std::map<ServiceId, CloudId> map;
    for (const auto& [cid, cloud] : registry_.clouds) {
      for (const auto& service : cloud.services) map[service.service_id] = cid;
    }
    return map;
  }

  // Registers a service runtime slot (initial topology and spawned clones).
  void track_service(const ServiceId& sid, const CloudId& cloud_id, Tick born) {
    ServiceRt rt;
    rt.cloud_id = cloud_id;
    rt.born = born;
    services_.emplace(sid, std::move(rt));
  }

  // handlers
  void handle(const Event& event, LogEntry& log);
  void on_request_arrival(const RequestArrival& msg, LogEntry& log);
  void on_forward_request(const ForwardRequest& msg, LogEntry& log);
  void on_propose(const ProposeCloudMsg& msg, LogEntry& log);
  void on_accept(const AcceptProposalMsg& msg, LogEntry& log);
  void on_grant(const LeaseGrantMsg& msg, LogEntry& log);
  void on_reject(const RejectProposalMsg& msg, LogEntry& log);
  void on_assign(const AssignTaskMsg& msg, LogEntry& log);
  void on_eptr(const EptrMsg& msg, LogEntry& log);
  void on_failure_notice(const FailureNoticeMsg& msg, LogEntry& log);
  void on_release(const ReleaseLeaseMsg& msg, LogEntry& log);
  void on_inject_failure(const InjectFailureMsg& msg, LogEntry& log);
  void on_recover(const RecoverMsg& msg, LogEntry& log);
  void on_timer(const TimerFireMsg& msg, LogEntry& log);

  void try_start(const ServiceId& sid);
  void complete_task(const ProductId& product, const exec::Eptr& eptr);
  void abort_task(const ProductId& product, const TaskId& task_id);
  void abort_cloud(const ProductId& product, const CloudId& cloud_id);
  void check_cloud_done(const ProductId& product, const CloudId& cloud_id);
  void check_product_done(const ProductId& product);
  std::optional<ServiceId> best_target(const ProductId& product,
                                       const CloudId& cloud_id) const;
  void dispatch_task(const ProductId& product, const ServiceId& target,
                     const TestTask& task);
  void salvage_tasks(const ProductId& product, const CloudId& cloud_id,
                     const std::vector<TestTask>& tasks);

  Scenario scenario_;
  core::Registry registry_;
  agg::OutputStandard standard_;
  std::map<CloudId, double> cloud_load_;

  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  std::int64_t next_seq_ = 0;
  Tick now_ = 0;

  std::map<ServiceId, ServiceRt> services_;
  std::map<ProductId, Sm> sms_;
  std::map<ProductId, alloc::Lease> leases_;

  SimResult result_;
};

SimResult Engine::run() {
  const auto diagnostics = validate_scenario(scenario_);
  if (!diagnostics.empty()) {
    throw_error(ErrorCode::kScenarioInvalid, diagnostics.front(),
                diagnostics.front());
  }

  registry_ = build_registry(scenario_);
  for (const auto& config : scenario_.clouds) {
    for (const auto& service : config.services) {
      track_service(service.service_id, config.cloud_id, 0);
    }
  }

  result_.seed = scenario_.seed;
  result_.latency = scenario_.latency;
  result_.first_arrival =
      scenario_.requests.empty() ? 0 : scenario_.requests.front().arrival_time;

  // Seed the loop: request arrivals and scheduled injections.
  for (const auto& entry : scenario_.requests) {
    const auto& pid = entry.request.product.product_id;
    enqueue(entry.arrival_time, entry.arrival_time, consumer_addr(pid),
            manager_addr(pid), RequestArrival{pid});
  }
  for (const auto& injection : scenario_.injections) {
    if (injection.action == InjectionAction::kFail) {
      enqueue(injection.time, injection.time, "env",
              service_addr(injection.service_id),
              InjectFailureMsg{injection.service_id});
    } else {
      enqueue(injection.time, injection.time, "env",
              service_addr(injection.service_id),
              RecoverMsg{injection.service_id});
    }
  }

  while (!queue_.empty()) {
    Event event = queue_.top();
    queue_.pop();
    now_ = event.deliver;

    LogEntry log;
    log.seq = event.seq;
    log.send = event.send;
    log.deliver = event.deliver;
    log.type = payload_type_name(event.payload);
    log.from = event.from;
    log.to = event.to;
    handle(event, log);
    result_.events.push_back(std::move(log));

    if (!alloc::verify_disjointness(registry_)) result_.disjointness_ok = false;
  }

  result_.end_time = now_;
  for (const auto& [pid, sm] : sms_) {
    for (const auto& [tid, trt] : sm.tasks) {
      TaskSummary summary;
      summary.status = trt.status;
      summary.executions = trt.executions;
      summary.case_count = trt.task.case_count;
      summary.product_id = pid;
      summary.cloud_id = trt.cloud_id;
      result_.tasks[tid] = summary;
    }
  }
  for (auto& [sid, rt] : services_) {
    if (rt.failed) {
      rt.failed_accum += now_ - rt.fail_start;
      rt.fail_start = now_;
    }
    ServiceUsage usage;
    usage.total_ticks = now_ - rt.born;
    usage.up_ticks = usage.total_ticks - rt.failed_accum;
    usage.busy_ticks = rt.busy_accum;
    result_.service_usage[sid] = usage;
  }

  for (const auto& entry : result_.events) {
    const Tick delay = entry.deliver - entry.send;
    if (delay != 0 && delay != scenario_.latency) result_.causality_ok = false;
    if (delay < 0) result_.causality_ok = false;
  }

  result_.metrics = compute_metrics(result_);
  return result_;
}

void Engine::handle(const Event& event, LogEntry& log) {
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, RequestArrival>) {
          on_request_arrival(msg, log);
        } else if constexpr (std::is_same_v<T, ForwardRequest>) {
          on_forward_request(msg, log);
        } else if constexpr (std::is_same_v<T, ProposeCloudMsg>) {
          on_propose(msg, log);
        } else if constexpr (std::is_same_v<T, AcceptProposalMsg>) {
          on_accept(msg, log);
        } else if constexpr (std::is_same_v<T, LeaseGrantMsg>) {
          on_grant(msg, log);
        } else if constexpr (std::is_same_v<T, RejectProposalMsg>) {
          on_reject(msg, log);
        } else if constexpr (std::is_same_v<T, AssignTaskMsg>) {
          on_assign(msg, log);
        } else if constexpr (std::is_same_v<T, EptrMsg>) {
          on_eptr(msg, log);
        } else if constexpr (std::is_same_v<T, EtrMsg>) {
          log.note = "product=" + msg.product_id + " cloud=" + msg.etr.cloud_id +
                     " cases=" + std::to_string(msg.etr.total_cases);
        } else if constexpr (std::is_same_v<T, FailureNoticeMsg>) {
          on_failure_notice(msg, log);
        } else if constexpr (std::is_same_v<T, ReleaseLeaseMsg>) {
          on_release(msg, log);
        } else if constexpr (std::is_same_v<T, InjectFailureMsg>) {
          on_inject_failure(msg, log);
        } else if constexpr (std::is_same_v<T, RecoverMsg>) {
          on_recover(msg, log);
        } else if constexpr (std::is_same_v<T, TimerFireMsg>) {
          on_timer(msg, log);
        }
      },
      event.payload);
}

void Engine::on_request_arrival(const RequestArrival& msg, LogEntry& log) {
  log.note = "product=" + msg.product_id;
  const RequestEntry* entry = nullptr;
  for (const auto& e : scenario_.requests) {
    if (e.request.product.product_id == msg.product_id) entry = &e;
  }
  Sm sm;
  sm.request = entry->request;
  sm.mode = entry->mode;
  registry_.managers.insert(manager_addr(msg.product_id));
  try {
    sm.vreq = core::validate_request(entry->request, scenario_.catalog);
  } catch (const Error& e) {
    sm.phase = Phase::kRejected;
    sms_.emplace(msg.product_id, std::move(sm));
    record_fault(fault::ExceptionKind::kTechniqueUnavailable, e.subject(),
                 fault::RecoveryAction::kAbortTask, 0, msg.product_id);
    result_.outcomes[msg.product_id] = ProductOutcome{"rejected", e.what(), {}};
    log.note += " rejected";
    return;
  }
  sm.phase = Phase::kNegotiating;
  auto vreq = sm.vreq;
  sms_.emplace(msg.product_id, std::move(sm));
  post(manager_addr(msg.product_id), "registry",
       ForwardRequest{msg.product_id, std::move(vreq)});
}

void Engine::on_forward_request(const ForwardRequest& msg, LogEntry& log) {
  log.note = "product=" + msg.product_id;
  try {
    auto proposals = alloc::form_clouds(registry_, msg.vreq, cloud_load_);
    std::vector<std::string> names;
    for (const auto& p : proposals) names.push_back(p.candidate_cloud_id);
    post("registry", manager_addr(msg.product_id),
         ProposeCloudMsg{msg.product_id, std::move(proposals)});
    log.note += " clouds=" + join_ids(names);
  } catch (const Error& e) {
    RejectProposalMsg reject;
    reject.product_id = msg.product_id;
    reject.reason = e.code();
    reject.subject = e.subject();
    reject.retry_hint = e.code() == ErrorCode::kNoCapacity &&
                        !registry_.active_allocations.empty();
    post("registry", manager_addr(msg.product_id), reject);
    log.note += " rejected=" + std::string(error_code_name(e.code()));
  }
}

void Engine::on_propose(const ProposeCloudMsg& msg, LogEntry& log) {
  auto& sm = sms_.at(msg.product_id);
  std::vector<std::string> names;
  for (const auto& p : msg.proposals) names.push_back(p.candidate_cloud_id);
  log.note = "product=" + msg.product_id + " clouds=" + join_ids(names);
  if (sm.phase != Phase::kNegotiating) {
    log.note += " :stale";
    return;
  }
  AcceptProposalMsg accept;
  accept.product_id = msg.product_id;
  accept.proposals = msg.proposals;
  accept.deadline = sm.request.deadline;
  for (const auto& technique : sm.request.techniques) {
    accept.estimates[technique] = sched::estimate_workload(
        sm.request.product, technique_spec(sm, technique));
  }
  sm.phase = Phase::kAccepting;
  post(manager_addr(msg.product_id), "registry", std::move(accept));
}

void Engine::on_accept(const AcceptProposalMsg& msg, LogEntry& log) {
  log.note = "product=" + msg.product_id;
  try {
    std::map<CloudId, alloc::CloneRequest> clones;
    std::map<CloudId, bool> feasible;
    for (const auto& proposal : msg.proposals) {
      const auto* cloud = registry_.find_cloud(proposal.candidate_cloud_id);
      if (cloud == nullptr) {
        throw_error(ErrorCode::kUnknownCloud, proposal.candidate_cloud_id,
                    "proposal names unknown cloud");
      }
      const auto plan = sched::decide_clone_count(
          msg.estimates.at(proposal.technique_id), msg.deadline, *cloud);
      clones[cloud->cloud_id] = alloc::CloneRequest{
          plan.count, clone_capacity_of(cloud->cloud_id)};
      feasible[cloud->cloud_id] = plan.feasible;
    }

    auto lease = alloc::allocate(registry_, msg.proposals,
                                 manager_addr(msg.product_id), now_, clones);

    LeaseGrantMsg grant;
    grant.product_id = msg.product_id;
    grant.granted_at = now_;
    std::string detail;
    for (const auto& proposal : msg.proposals) {
      const auto* cloud = registry_.find_cloud(proposal.candidate_cloud_id);
      CloudGrant cg;
      cg.cloud_id = cloud->cloud_id;
      cg.technique_id = cloud->technique_id;
      cg.feasible = feasible[cloud->cloud_id];
      for (const auto& service : cloud->services) {
        if (service.state.is_leased_to(msg.product_id)) {
          cg.services.push_back({service.service_id, service.capacity});
          if (services_.find(service.service_id) == services_.end()) {
            track_service(service.service_id, cloud->cloud_id, now_);
          }
        }
      }
      detail += " " + cg.cloud_id + "=[";
      for (std::size_t i = 0; i < cg.services.size(); ++i) {
        detail += (i ? "," : "") + cg.services[i].service_id;
      }
      detail += "]";
      grant.clouds.push_back(std::move(cg));
    }
    leases_.emplace(msg.product_id, std::move(lease));
    log.note += " granted" + detail;
    post("registry", manager_addr(msg.product_id), std::move(grant));
  } catch (const Error& e) {
    RejectProposalMsg reject;
    reject.product_id = msg.product_id;
    reject.reason = e.code();
    reject.subject = e.subject();
    reject.retry_hint = !registry_.active_allocations.empty();
    post("registry", manager_addr(msg.product_id), reject);
    log.note += " rejected=" + std::string(error_code_name(e.code()));
  }
}

void Engine::on_grant(const LeaseGrantMsg& msg, LogEntry& log) {
  auto& sm = sms_.at(msg.product_id);
  log.note = "product=" + msg.product_id;
  if (sm.phase != Phase::kAccepting) {
    log.note += " :stale";
    return;
  }
  sm.phase = Phase::kRunning;
  sm.granted_at = msg.granted_at;

  for (const auto& grant : msg.clouds) {
    const auto& spec = technique_spec(sm, grant.technique_id);
    auto tasks = sched::make_tasks(sm.request.product, spec, sm.request.deadline);
    auto assignment = sched::partition_load(tasks, grant.services, sm.mode);

    CloudRun run;
    run.technique_id = grant.technique_id;
    run.feasible = grant.feasible;

    nlohmann::json plan;
    plan["product_id"] = msg.product_id;
    plan["cloud_id"] = grant.cloud_id;
    plan["technique_id"] = grant.technique_id;
    plan["mode"] = std::string(sched::distribution_mode_name(sm.mode));
    plan["feasible"] = grant.feasible;
    plan["assignment"] = nlohmann::json::object();

    double load = 0.0;
    for (const auto& [sid, list] : assignment.by_service) {
      auto& ids = plan["assignment"][sid] = nlohmann::json::array();
      for (const auto& task : list) {
        ids.push_back(task.task_id);
        TaskRt trt;
        trt.task = task;
        trt.cloud_id = grant.cloud_id;
        trt.technique_id = grant.technique_id;
        sm.tasks.emplace(task.task_id, std::move(trt));
        run.outstanding.insert(task.task_id);
        load += static_cast<double>(task.est_duration);
        post(manager_addr(msg.product_id), service_addr(sid),
             AssignTaskMsg{sid, task});
      }
    }
    cloud_load_[grant.cloud_id] += load;
    result_.plans.push_back(std::move(plan));
    sm.cloud_order.push_back(grant.cloud_id);
    sm.clouds.emplace(grant.cloud_id, std::move(run));
    if (!grant.feasible) log.note += " infeasible=" + grant.cloud_id;
  }
}

void Engine::on_reject(const RejectProposalMsg& msg, LogEntry& log) {
  auto& sm = sms_.at(msg.product_id);
  log.note = "product=" + msg.product_id + " reason=" +
             std::string(error_code_name(msg.reason)) + " subject=" + msg.subject +
             " retry=" + (msg.retry_hint ? "1" : "0");
  if (sm.phase != Phase::kNegotiating && sm.phase != Phase::kAccepting) {
    log.note += " :stale";
    return;
  }
  const auto kind = (msg.reason == ErrorCode::kAllocationConflict ||
                     msg.reason == ErrorCode::kStaleProposal)
                        ? fault::ExceptionKind::kAllocationConflict
                        : fault::ExceptionKind::kTechniqueUnavailable;
  if (msg.retry_hint) {
    record_fault(kind, msg.subject, fault::RecoveryAction::kRetry,
                 sm.nego_attempts, msg.product_id);
    sm.nego_attempts++;
    sm.phase = Phase::kWaitingRetry;
    TimerFireMsg timer;
    timer.kind = TimerKind::kNegotiationRetry;
    timer.product_id = msg.product_id;
    post_local(manager_addr(msg.product_id), now_ + scenario_.retry_backoff,
               timer);
  } else {
    record_fault(kind, msg.subject, fault::RecoveryAction::kAbortTask,
                 sm.nego_attempts, msg.product_id);
    sm.phase = Phase::kRejected;
    result_.outcomes[msg.product_id] = ProductOutcome{
        "rejected",
        std::string(error_code_name(msg.reason)) + ":" + msg.subject,
        {}};
  }
}

void Engine::on_assign(const AssignTaskMsg& msg, LogEntry& log) {
  const auto& task = msg.task;
  log.note = "task=" + task.task_id + " cases=" + std::to_string(task.case_count);
  auto& sm = sms_.at(task.product_id);
  auto& trt = sm.tasks.at(task.task_id);
  if (trt.status != "pending") {
    log.note += " :stale";
    return;
  }
  auto& rt = services_.at(msg.service_id);
  if (rt.failed) {
    // The assignment raced with a failure; bounce it back through recovery.
    log.note += " :bounced";
    salvage_tasks(task.product_id, rt.cloud_id, {task});
    return;
  }
  rt.queue.push_back(task);
  try_start(msg.service_id);
}

void Engine::try_start(const ServiceId& sid) {
  auto& rt = services_.at(sid);
  if (rt.failed || rt.active.has_value() || rt.queue.empty()) return;

  TestTask task = rt.queue.front();
  rt.queue.pop_front();
  auto& sm = sms_.at(task.product_id);
  auto& trt = sm.tasks.at(task.task_id);
  trt.status = "running";
  trt.executions++;
  rt.incarnation++;

  const auto* cloud = registry_.find_cloud(rt.cloud_id);
  const auto* service = cloud->find_service(sid);
  const auto& spec = technique_spec(sm, trt.technique_id);

  const Tick run_time = exec::task_run_time(task, spec.avg_case_time,
                                            service->capacity);
  rt.active = ActiveRun{task, now_, run_time};

  const Tick budget = 2 * task.est_duration;
  TimerFireMsg timer;
  timer.product_id = task.product_id;
  timer.service_id = sid;
  timer.task_id = task.task_id;
  timer.incarnation = rt.incarnation;
  if (run_time > budget) {
    // This execution cannot finish inside the watchdog budget.
    timer.kind = TimerKind::kTaskTimeout;
    post_local(service_addr(sid), now_ + budget, timer);
  } else {
    timer.kind = TimerKind::kTaskDone;
    post_local(service_addr(sid), now_ + run_time, timer);
  }
}

void Engine::on_timer(const TimerFireMsg& msg, LogEntry& log) {
  switch (msg.kind) {
    case TimerKind::kNegotiationRetry: {
      auto& sm = sms_.at(msg.product_id);
      log.note = "kind=retry product=" + msg.product_id;
      if (sm.phase != Phase::kWaitingRetry) {
        log.note += " :stale";
        return;
      }
      sm.phase = Phase::kNegotiating;
      post(manager_addr(msg.product_id), "registry",
           ForwardRequest{msg.product_id, sm.vreq});
      return;
    }
    case TimerKind::kTaskDone: {
      log.note = "kind=done task=" + msg.task_id;
      auto& rt = services_.at(msg.service_id);
      if (rt.incarnation != msg.incarnation || !rt.active.has_value()) {
        log.note += " :stale";
        return;
      }
      const ActiveRun run = *rt.active;
      rt.busy_accum += run.run_time;
      rt.active.reset();

      // Emit the report; once the run completed, a later failure of this
      // service cannot retract it.
      auto& sm = sms_.at(msg.product_id);
      const auto& trt = sm.tasks.at(msg.task_id);
      const auto* cloud = registry_.find_cloud(rt.cloud_id);
      const auto* service = cloud->find_service(msg.service_id);
      const auto& spec = technique_spec(sm, trt.technique_id);

      exec::RunnerContext ctx;
      ctx.service_id = msg.service_id;
      ctx.capacity = service->capacity;
      ctx.avg_case_time = spec.avg_case_time;
      ctx.seed = scenario_.seed;
      ctx.defect_density = sm.request.product.defect_density_estimate;
      ctx.started_at = run.started;

      exec::SimulatedRunner runner;
      const auto eptr = exec::run_task(run.task, runner, *service, ctx);
      post(service_addr(msg.service_id), manager_addr(msg.product_id),
           EptrMsg{msg.product_id, eptr});
      try_start(msg.service_id);
      return;
    }
    case TimerKind::kTaskTimeout: {
      log.note = "kind=timeout task=" + msg.task_id;
      auto& rt = services_.at(msg.service_id);
      if (rt.incarnation != msg.incarnation || !rt.active.has_value()) {
        log.note += " :stale";
        return;
      }
      const ActiveRun run = *rt.active;
      rt.busy_accum += now_ - run.started;
      rt.active.reset();

      auto& sm = sms_.at(msg.product_id);
      auto& trt = sm.tasks.at(msg.task_id);
      const auto kind = fault::classify(
          {fault::RuntimeEventKind::kTaskOverBudget, msg.task_id});
      fault::RecoveryContext ctx;
      ctx.attempts = trt.attempts;
      ctx.max_retries = scenario_.max_retries;
      const auto action = fault::decide_recovery(kind, ctx);
      record_fault(kind, msg.task_id, action, trt.attempts, msg.product_id);
      if (action == fault::RecoveryAction::kRetry) {
        trt.attempts++;
        trt.status = "pending";
        rt.queue.push_front(run.task);
      } else {
        abort_task(msg.product_id, msg.task_id);
      }
      try_start(msg.service_id);
      return;
    }
  }
}

void Engine::on_eptr(const EptrMsg& msg, LogEntry& log) {
  log.note = "task=" + msg.eptr.task_id + " service=" + msg.eptr.service_id +
             " cases=" + std::to_string(msg.eptr.cases_executed) +
             " time=" + std::to_string(msg.eptr.time_spent);
  auto& sm = sms_.at(msg.product_id);
  auto& trt = sm.tasks.at(msg.eptr.task_id);
  if (trt.status != "running") {
    log.note += " :stale";
    return;
  }
  complete_task(msg.product_id, msg.eptr);
}

void Engine::complete_task(const ProductId& product, const exec::Eptr& eptr) {
  auto& sm = sms_.at(product);
  auto& trt = sm.tasks.at(eptr.task_id);
  trt.status = "completed";
  auto& run = sm.clouds.at(trt.cloud_id);
  run.outstanding.erase(eptr.task_id);
  run.eptrs.push_back(eptr);
  cloud_load_[trt.cloud_id] -= static_cast<double>(trt.task.est_duration);
  result_.any_eptr = true;
  result_.last_finish = std::max(result_.last_finish, eptr.finished_at);
  check_cloud_done(product, trt.cloud_id);
}

void Engine::abort_task(const ProductId& product, const TaskId& task_id) {
  auto& sm = sms_.at(product);
  auto& trt = sm.tasks.at(task_id);
  if (trt.status == "completed" || trt.status == "aborted") return;
  trt.status = "aborted";
  auto& run = sm.clouds.at(trt.cloud_id);
  run.outstanding.erase(task_id);
  cloud_load_[trt.cloud_id] -= static_cast<double>(trt.task.est_duration);
  check_cloud_done(product, trt.cloud_id);
}

void Engine::abort_cloud(const ProductId& product, const CloudId& cloud_id) {
  auto& sm = sms_.at(product);
  auto& run = sm.clouds.at(cloud_id);
  run.aborted = true;
  std::vector<TaskId> outstanding(run.outstanding.begin(), run.outstanding.end());
  for (const auto& task_id : outstanding) abort_task(product, task_id);
  check_cloud_done(product, cloud_id);
}

void Engine::check_cloud_done(const ProductId& product, const CloudId& cloud_id) {
  auto& sm = sms_.at(product);
  auto& run = sm.clouds.at(cloud_id);
  if (run.finalized || !run.outstanding.empty()) return;
  run.finalized = true;
  if (!run.eptrs.empty()) {
    auto etr = agg::merge_eptrs(cloud_id, run.technique_id, run.eptrs, standard_,
                                service_cloud_map(), sm.granted_at);
    sm.etrs.push_back(etr);
    post(manager_addr(product), consumer_addr(product), EtrMsg{product, etr});
  } else {
    // Nothing came back from this cloud at all.
    run.aborted = true;
  }
  check_product_done(product);
}

void Engine::check_product_done(const ProductId& product) {
  auto& sm = sms_.at(product);
  if (sm.phase != Phase::kRunning) return;
  for (const auto& cid : sm.cloud_order) {
    if (!sm.clouds.at(cid).finalized) return;
  }
  sm.phase = Phase::kDone;

  Tick max_elapsed = 0;
  for (const auto& etr : sm.etrs) max_elapsed = std::max(max_elapsed, etr.elapsed);
  if (max_elapsed > sm.request.deadline) {
    record_fault(fault::ExceptionKind::kDeadlineExceeded, product,
                 fault::RecoveryAction::kNone, 0, product);
  }

  std::vector<CloudId> aborted;
  for (const auto& cid : sm.cloud_order) {
    if (sm.clouds.at(cid).aborted) aborted.push_back(cid);
  }
  const auto report = agg::integrate_etrs(product, sm.etrs, sm.request.deadline,
                                          sm.faults, sm.cloud_order, aborted);
  result_.outcomes[product] = ProductOutcome{"completed", "", report};
  post(manager_addr(product), "registry", ReleaseLeaseMsg{product});
}

std::optional<ServiceId> Engine::best_target(const ProductId& product,
                                             const CloudId& cloud_id) const {
  const auto* cloud = registry_.find_cloud(cloud_id);
  std::optional<ServiceId> best;
  Tick best_pending = 0;
  for (const auto& service : cloud->services) {
    if (!service.state.is_leased_to(product)) continue;
    const auto& rt = services_.at(service.service_id);
    if (rt.failed) continue;
    const Tick pending = rt.pending_work();
    if (!best || pending < best_pending ||
        (pending == best_pending && service.service_id < *best)) {
      best = service.service_id;
      best_pending = pending;
    }
  }
  return best;
}

void Engine::dispatch_task(const ProductId& product, const ServiceId& target,
                           const TestTask& task) {
  post(manager_addr(product), service_addr(target), AssignTaskMsg{target, task});
}

void Engine::salvage_tasks(const ProductId& product, const CloudId& cloud_id,
                           const std::vector<TestTask>& tasks) {
  if (tasks.empty()) return;
  auto& sm = sms_.at(product);
  if (sm.clouds.at(cloud_id).aborted) {
    for (const auto& task : tasks) abort_task(product, task.task_id);
    return;
  }
  if (!best_target(product, cloud_id).has_value()) {
    const auto* cloud = registry_.find_cloud(cloud_id);
    if (static_cast<int>(cloud->services.size()) < cloud->max_services) {
      const auto clone_id = alloc::spawn_clone(registry_, cloud_id,
                                               clone_capacity_of(cloud_id));
      track_service(clone_id, cloud_id, now_);
      record_fault(fault::ExceptionKind::kServiceFailure, cloud_id,
                   fault::RecoveryAction::kSpawnClone, 0, product);
    } else {
      record_fault(fault::ExceptionKind::kServiceFailure, cloud_id,
                   fault::RecoveryAction::kAbortCloud, 0, product);
      abort_cloud(product, cloud_id);
      return;
    }
  }
  for (const auto& task : tasks) {
    const auto target = best_target(product, cloud_id);
    dispatch_task(product, *target, task);
  }
}

void Engine::on_failure_notice(const FailureNoticeMsg& msg, LogEntry& log) {
  log.note = "service=" + msg.service_id +
             (msg.in_flight ? " inflight=" + *msg.in_flight : "") +
             " queued=" + std::to_string(msg.queued.size());
  auto& sm = sms_.at(msg.product_id);
  const auto& rt = services_.at(msg.service_id);
  const CloudId cloud_id = rt.cloud_id;
  const auto* cloud = registry_.find_cloud(cloud_id);

  bool cloud_aborted = false;
  if (msg.in_flight.has_value()) {
    auto& trt = sm.tasks.at(*msg.in_flight);
    if (trt.status == "running") {
      int live = 0;
      for (const auto& service : cloud->services) {
        if (!services_.at(service.service_id).failed) ++live;
      }
      fault::RecoveryContext ctx;
      ctx.attempts = trt.attempts;
      ctx.free_siblings = live;
      ctx.cloud_size = static_cast<int>(cloud->services.size());
      ctx.max_services = cloud->max_services;
      ctx.max_retries = scenario_.max_retries;
      const auto kind = fault::classify(
          {fault::RuntimeEventKind::kWorkerCrash, msg.service_id});
      const auto action = fault::decide_recovery(kind, ctx);
      record_fault(kind, msg.service_id, action, trt.attempts, msg.product_id);
      switch (action) {
        case fault::RecoveryAction::kReassign: {
          trt.attempts++;
          trt.status = "pending";
          const auto target = best_target(msg.product_id, cloud_id);
          dispatch_task(msg.product_id, *target, trt.task);
          break;
        }
        case fault::RecoveryAction::kSpawnClone: {
          trt.attempts++;
          trt.status = "pending";
          const auto clone_id = alloc::spawn_clone(registry_, cloud_id,
                                                   clone_capacity_of(cloud_id));
          track_service(clone_id, cloud_id, now_);
          dispatch_task(msg.product_id, clone_id, trt.task);
          break;
        }
        case fault::RecoveryAction::kAbortTask:
          abort_task(msg.product_id, *msg.in_flight);
          break;
        case fault::RecoveryAction::kAbortCloud:
          abort_cloud(msg.product_id, cloud_id);
          cloud_aborted = true;
          break;
        default:
          break;
      }
    }
  } else if (msg.queued.empty()) {
    // An idle leased service failed; nothing to recover, log the event.
    record_fault(fault::ExceptionKind::kServiceFailure, msg.service_id,
                 fault::RecoveryAction::kNone, 0, msg.product_id);
  }

  if (!msg.queued.empty() && !cloud_aborted) {
    std::vector<TestTask> tasks;
    for (const auto& task_id : msg.queued) {
      const auto& trt = sm.tasks.at(task_id);
      if (trt.status == "pending") tasks.push_back(trt.task);
    }
    salvage_tasks(msg.product_id, cloud_id, tasks);
  }
}

void Engine::on_release(const ReleaseLeaseMsg& msg, LogEntry& log) {
  log.note = "product=" + msg.product_id;
  auto it = leases_.find(msg.product_id);
  if (it == leases_.end() || it->second.released) {
    log.note += " :stale";
    return;
  }
  alloc::release(registry_, it->second);
}

void Engine::on_inject_failure(const InjectFailureMsg& msg, LogEntry& log) {
  log.note = "service=" + msg.service_id;
  auto& rt = services_.at(msg.service_id);
  if (rt.failed) {
    log.note += " :noop";
    return;
  }
  const auto* cloud = registry_.find_cloud(rt.cloud_id);
  const auto* service = cloud->find_service(msg.service_id);
  const auto prev_state = service->state;

  alloc::mark_failed(registry_, msg.service_id);
  rt.failed = true;
  rt.fail_start = now_;

  std::optional<TaskId> in_flight;
  if (rt.active.has_value()) {
    // Mid-task failure discards the partial run; the watchdog/done timers
    // for this incarnation become stale.
    in_flight = rt.active->task.task_id;
    rt.busy_accum += now_ - rt.active->started;
    rt.active.reset();
    rt.incarnation++;
  }
  std::vector<TaskId> queued;
  for (const auto& task : rt.queue) queued.push_back(task.task_id);
  rt.queue.clear();

  if (prev_state.kind == core::ServiceStateKind::kLeased) {
    FailureNoticeMsg notice;
    notice.product_id = prev_state.leased_to;
    notice.service_id = msg.service_id;
    notice.in_flight = in_flight;
    notice.queued = std::move(queued);
    post(service_addr(msg.service_id), manager_addr(prev_state.leased_to),
         std::move(notice));
  } else {
    // No lease, so no manager to notify; the event still lands in the log.
    record_fault(fault::ExceptionKind::kServiceFailure, msg.service_id,
                 fault::RecoveryAction::kNone, 0, "");
  }
}

void Engine::on_recover(const RecoverMsg& msg, LogEntry& log) {
  log.note = "service=" + msg.service_id;
  auto& rt = services_.at(msg.service_id);
  if (!rt.failed) {
    log.note += " :noop";
    return;
  }
  rt.failed_accum += now_ - rt.fail_start;
  rt.failed = false;
  alloc::mark_recovered(registry_, msg.service_id);
}

}  // namespace

SimResult run_simulation(const Scenario& scenario) {
  Engine engine(scenario);
  return engine.run();
}

}  // namespace nimbus::sim
