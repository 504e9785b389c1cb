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

#include <nlohmann/json.hpp>

#include "nimbus/core/types.hpp"

// Service Manager cloud formation: registration, single-round negotiation
// with candidate clouds, exclusive whole-cloud leasing, and release.
//
// All mutating operations follow a single-writer contract: they are
// serialized through one logical owner (the simulation event loop, or one
// registry thread in real mode). A failed mutation leaves the registry
// unchanged.

namespace nimbus::alloc {

using core::CloudId;
using core::ProductId;
using core::Registry;
using core::ServiceId;
using core::TechniqueId;
using core::Tick;

// One candidate cloud per requested technique, produced by the negotiation
// round. The free-service snapshot lets allocate() detect services that
// failed between proposal and acceptance.
struct CloudProposal {
  ProductId product_id;
  TechniqueId technique_id;
  CloudId candidate_cloud_id;
  double current_load = 0.0;  // sum of pending task durations, >= 0
  std::vector<ServiceId> free_service_ids;

  friend bool operator==(const CloudProposal&, const CloudProposal&) = default;
};

// The enforcement record granting a product exclusive use of its clouds.
// Once released, no task may be assigned under it.
struct Lease {
  core::ProductAllocation allocation;
  Tick granted_at = 0;
  bool released = false;

  friend bool operator==(const Lease&, const Lease&) = default;
};

// Per-cloud clone request applied atomically during allocate(): ensure the
// cloud holds at least `min_services` members (spawning up to max_services),
// each new clone created with `clone_capacity`.
struct CloneRequest {
  int min_services = 1;
  double clone_capacity = 1.0;

  friend bool operator==(const CloneRequest&, const CloneRequest&) = default;
};

// Adds a whole cloud to the directory. The cloud must satisfy its own
// invariants: 1 <= |services| <= max_services, uniform technique, unique
// service ids (registry-wide), every service Free.
void add_cloud(Registry& registry, const core::TestingCloud& cloud);

// Registers one more service into an existing cloud; it appears Free.
// Errors: kUnknownCloud, kCloudFull, kTechniqueMismatch, kDuplicateServiceId.
void register_service(Registry& registry, const core::TestingService& descriptor,
                      const CloudId& cloud_id);

// Negotiation round: exactly one proposal per requested technique. Candidate
// rule: among clouds of the matching technique with at least one Free
// service, minimum current_load, tie-break lexicographically smallest
// cloud_id. `cloud_load` supplies pending-work figures per cloud (missing
// entries count as 0). Pure function of its inputs.
// Errors: kTechniqueUnavailable, kNoCapacity.
std::vector<CloudProposal> form_clouds(
    const Registry& registry, const core::ValidatedRequest& request,
    const std::map<CloudId, double>& cloud_load = {});

// Accepts a negotiated proposal set: atomically leases every named cloud to
// the product (all-or-nothing), spawning clones first where requested. On
// error the registry is byte-identical to its pre-call state.
// Errors: kAllocationConflict (a named cloud gained a lease, or the product
// already holds one), kStaleProposal (a snapshotted free service failed
// meanwhile), kUnknownCloud.
Lease allocate(Registry& registry, const std::vector<CloudProposal>& proposals,
               const core::ManagerId& manager_id, Tick granted_at,
               const std::map<CloudId, CloneRequest>& clones = {});

// Ends a lease: leased members return to Free, failed members stay Failed
// awaiting recovery, and the allocation is removed. Errors: kAlreadyReleased.
void release(Registry& registry, Lease& lease);

// Spawns one clone service inside a cloud, respecting max_services. If the
// cloud is under an active lease the clone joins it (born Leased), otherwise
// it is Free. Returns the new service id. Errors: kUnknownCloud, kCloudFull.
ServiceId spawn_clone(Registry& registry, const CloudId& cloud_id,
                      double capacity);

// Failure/recovery transitions, applied by the fault machinery.
// mark_failed: any -> Failed. mark_recovered: Failed -> Free, then back into
// the active lease if the owning cloud is currently allocated.
void mark_failed(Registry& registry, const ServiceId& service_id);
void mark_recovered(Registry& registry, const ServiceId& service_id);

// The exclusivity check: true iff for every pair of distinct active products
// the leased cloud sets and service sets are disjoint. Pure.
bool verify_disjointness(const Registry& registry);

// Deterministic snapshot for debugging and byte-comparison tests.
nlohmann::json registry_snapshot(const Registry& registry);

}  // namespace nimbus::alloc
