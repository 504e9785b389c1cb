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

#include "nimbus/alloc/allocation.hpp"

#include <algorithm>
#include <set>

#include "nimbus/core/error.hpp"
#include "nimbus/core/serialization.hpp"

namespace nimbus::alloc {

namespace {

bool service_id_taken(const Registry& registry, const ServiceId& id) {
  return registry.cloud_of_service(id) != nullptr;
}

double load_of(const std::map<CloudId, double>& cloud_load, const CloudId& id) {
  auto it = cloud_load.find(id);
  return it == cloud_load.end() ? 0.0 : it->second;
}

}  // namespace

void add_cloud(Registry& registry, const core::TestingCloud& cloud) {
  if (cloud.cloud_id.empty()) {
    throw_error(ErrorCode::kInvalidField, "cloud_id", "cloud_id must be nonempty");
  }
  if (registry.clouds.count(cloud.cloud_id) != 0) {
    throw_error(ErrorCode::kDuplicateCloudId, cloud.cloud_id,
                "cloud " + cloud.cloud_id + " already registered");
  }
  if (cloud.max_services < 1) {
    throw_error(ErrorCode::kInvalidField, "max_services",
                "max_services must be >= 1 for cloud " + cloud.cloud_id);
  }
  if (cloud.services.empty() ||
      static_cast<int>(cloud.services.size()) > cloud.max_services) {
    throw_error(ErrorCode::kInvalidField, "services",
                "cloud " + cloud.cloud_id + " must hold between 1 and " +
                    std::to_string(cloud.max_services) + " services");
  }
  std::set<ServiceId> in_cloud;
  for (const auto& service : cloud.services) {
    if (service.technique_id != cloud.technique_id) {
      throw_error(ErrorCode::kTechniqueMismatch, service.service_id,
                  "service " + service.service_id + " technique differs from cloud " +
                      cloud.cloud_id);
    }
    if (!(service.capacity > 0.0)) {
      throw_error(ErrorCode::kInvalidField, "capacity",
                  "capacity must be > 0 for service " + service.service_id);
    }
    if (!service.state.is_free()) {
      throw_error(ErrorCode::kInvalidField, "state",
                  "service " + service.service_id + " must be registered Free");
    }
    if (!in_cloud.insert(service.service_id).second ||
        service_id_taken(registry, service.service_id)) {
      throw_error(ErrorCode::kDuplicateServiceId, service.service_id,
                  "service id " + service.service_id + " already registered");
    }
  }
  registry.clouds.emplace(cloud.cloud_id, cloud);
}

void register_service(Registry& registry, const core::TestingService& descriptor,
                      const CloudId& cloud_id) {
  auto* cloud = registry.find_cloud(cloud_id);
  if (cloud == nullptr) {
    throw_error(ErrorCode::kUnknownCloud, cloud_id, "no such cloud: " + cloud_id);
  }
  if (static_cast<int>(cloud->services.size()) >= cloud->max_services) {
    throw_error(ErrorCode::kCloudFull, cloud_id,
                "cloud " + cloud_id + " is at max_services=" +
                    std::to_string(cloud->max_services));
  }
  if (descriptor.technique_id != cloud->technique_id) {
    throw_error(ErrorCode::kTechniqueMismatch, descriptor.service_id,
                "service technique " + descriptor.technique_id +
                    " does not match cloud technique " + cloud->technique_id);
  }
  if (!(descriptor.capacity > 0.0)) {
    throw_error(ErrorCode::kInvalidField, "capacity",
                "capacity must be > 0 for service " + descriptor.service_id);
  }
  if (service_id_taken(registry, descriptor.service_id)) {
    throw_error(ErrorCode::kDuplicateServiceId, descriptor.service_id,
                "service id " + descriptor.service_id + " already registered");
  }
  core::TestingService entry = descriptor;
  entry.state = core::ServiceState::free();
  cloud->services.push_back(std::move(entry));
}

std::vector<CloudProposal> form_clouds(
    const Registry& registry, const core::ValidatedRequest& request,
    const std::map<CloudId, double>& cloud_load) {
  std::vector<CloudProposal> proposals;
  for (const auto& technique : request.request.techniques) {
    const core::TestingCloud* best = nullptr;
    bool technique_seen = false;
    for (const auto& [cid, cloud] : registry.clouds) {
      if (cloud.technique_id != technique) continue;
      technique_seen = true;
      if (cloud.free_service_count() == 0) continue;
      if (best == nullptr) {
        best = &cloud;
        continue;
      }
      const double cand = load_of(cloud_load, cloud.cloud_id);
      const double cur = load_of(cloud_load, best->cloud_id);
      // Minimum load; ties fall to the lexicographically smaller id, which
      // is the map iteration order.
      if (cand < cur) best = &cloud;
    }
    if (!technique_seen) {
      throw_error(ErrorCode::kTechniqueUnavailable, technique,
                  "no cloud serves technique " + technique);
    }
    if (best == nullptr) {
      throw_error(ErrorCode::kNoCapacity, technique,
                  "all clouds for technique " + technique + " are busy or failed");
    }
    CloudProposal proposal;
    proposal.product_id = request.request.product.product_id;
    proposal.technique_id = technique;
    proposal.candidate_cloud_id = best->cloud_id;
    proposal.current_load = load_of(cloud_load, best->cloud_id);
    for (const auto& service : best->services) {
      if (service.state.is_free()) {
        proposal.free_service_ids.push_back(service.service_id);
      }
    }
    proposals.push_back(std::move(proposal));
  }
  return proposals;
}

Lease allocate(Registry& registry, const std::vector<CloudProposal>& proposals,
               const core::ManagerId& manager_id, Tick granted_at,
               const std::map<CloudId, CloneRequest>& clones) {
  if (proposals.empty()) {
    throw_error(ErrorCode::kInvalidField, "proposals", "no proposals to allocate");
  }
  const ProductId product_id = proposals.front().product_id;
  if (registry.active_allocations.count(product_id) != 0) {
    throw_error(ErrorCode::kAllocationConflict, product_id,
                "product " + product_id + " already holds an allocation");
  }

  // Validate everything before mutating anything: a failed allocate must
  // leave the registry byte-identical to its pre-call state.
  for (const auto& proposal : proposals) {
    const auto* cloud = registry.find_cloud(proposal.candidate_cloud_id);
    if (cloud == nullptr) {
      throw_error(ErrorCode::kUnknownCloud, proposal.candidate_cloud_id,
                  "proposal names unknown cloud " + proposal.candidate_cloud_id);
    }
    for (const auto& service : cloud->services) {
      if (service.state.kind == core::ServiceStateKind::kLeased) {
        throw_error(ErrorCode::kAllocationConflict, cloud->cloud_id,
                    "cloud " + cloud->cloud_id + " gained a lease since proposal");
      }
    }
    for (const auto& sid : proposal.free_service_ids) {
      const auto* service = cloud->find_service(sid);
      if (service == nullptr || service->state.is_failed()) {
        throw_error(ErrorCode::kStaleProposal, sid,
                    "service " + sid + " failed between proposal and allocate");
      }
    }
    if (cloud->free_service_count() == 0) {
      throw_error(ErrorCode::kStaleProposal, cloud->cloud_id,
                  "cloud " + cloud->cloud_id + " has no free services left");
    }
  }

  // Commit: spawn requested clones, then lease every free member.
  core::ProductAllocation allocation;
  allocation.product_id = product_id;
  allocation.manager_id = manager_id;
  for (const auto& proposal : proposals) {
    auto* cloud = registry.find_cloud(proposal.candidate_cloud_id);
    if (auto it = clones.find(cloud->cloud_id); it != clones.end()) {
      while (static_cast<int>(cloud->services.size()) < it->second.min_services &&
             static_cast<int>(cloud->services.size()) < cloud->max_services) {
        spawn_clone(registry, cloud->cloud_id, it->second.clone_capacity);
      }
    }
    allocation.cloud_ids.push_back(cloud->cloud_id);
    for (auto& service : cloud->services) {
      if (service.state.is_free()) {
        service.state = core::ServiceState::leased(product_id);
        allocation.service_ids.push_back(service.service_id);
      }
    }
  }
  registry.managers.insert(manager_id);
  registry.active_allocations.emplace(product_id, allocation);

  Lease lease;
  lease.allocation = std::move(allocation);
  lease.granted_at = granted_at;
  lease.released = false;
  return lease;
}

void release(Registry& registry, Lease& lease) {
  if (lease.released) {
    throw_error(ErrorCode::kAlreadyReleased, lease.allocation.product_id,
                "lease for product " + lease.allocation.product_id +
                    " already released");
  }
  const auto& product_id = lease.allocation.product_id;
  for (const auto& cid : lease.allocation.cloud_ids) {
    auto* cloud = registry.find_cloud(cid);
    if (cloud == nullptr) continue;
    for (auto& service : cloud->services) {
      // Failed members stay Failed awaiting recovery.
      if (service.state.is_leased_to(product_id)) {
        service.state = core::ServiceState::free();
      }
    }
  }
  registry.active_allocations.erase(product_id);
  lease.released = true;
}

ServiceId spawn_clone(Registry& registry, const CloudId& cloud_id,
                      double capacity) {
  auto* cloud = registry.find_cloud(cloud_id);
  if (cloud == nullptr) {
    throw_error(ErrorCode::kUnknownCloud, cloud_id, "no such cloud: " + cloud_id);
  }
  if (static_cast<int>(cloud->services.size()) >= cloud->max_services) {
    throw_error(ErrorCode::kCloudFull, cloud_id,
                "cloud " + cloud_id + " is at max_services");
  }
  // Deterministic clone ids: <cloud>.c1, <cloud>.c2, ... skipping any id
  // already present in the registry.
  int n = 1;
  ServiceId clone_id;
  do {
    clone_id = cloud_id + ".c" + std::to_string(n++);
  } while (service_id_taken(registry, clone_id));

  core::TestingService clone;
  clone.service_id = clone_id;
  clone.technique_id = cloud->technique_id;
  clone.capacity = capacity;
  clone.state = core::ServiceState::free();

  // A clone spawned into an actively leased cloud joins the lease.
  for (auto& [pid, allocation] : registry.active_allocations) {
    if (std::find(allocation.cloud_ids.begin(), allocation.cloud_ids.end(),
                  cloud_id) != allocation.cloud_ids.end()) {
      clone.state = core::ServiceState::leased(pid);
      allocation.service_ids.push_back(clone_id);
      break;
    }
  }
  cloud->services.push_back(clone);
  return clone_id;
}

void mark_failed(Registry& registry, const ServiceId& service_id) {
  auto* cloud = registry.cloud_of_service(service_id);
  if (cloud == nullptr) {
    throw_error(ErrorCode::kInvalidField, service_id,
                "no such service: " + service_id);
  }
  cloud->find_service(service_id)->state = core::ServiceState::failed();
}

void mark_recovered(Registry& registry, const ServiceId& service_id) {
  auto* cloud = registry.cloud_of_service(service_id);
  if (cloud == nullptr) {
    throw_error(ErrorCode::kInvalidField, service_id,
                "no such service: " + service_id);
  }
  auto* service = cloud->find_service(service_id);
  if (!service->state.is_failed()) return;
  service->state = core::ServiceState::free();
  // Rejoin the active lease, if any, so a leased cloud never exposes free
  // services to the negotiation round.
  for (auto& [pid, allocation] : registry.active_allocations) {
    if (std::find(allocation.cloud_ids.begin(), allocation.cloud_ids.end(),
                  cloud->cloud_id) != allocation.cloud_ids.end()) {
      service->state = core::ServiceState::leased(pid);
      if (std::find(allocation.service_ids.begin(), allocation.service_ids.end(),
                    service_id) == allocation.service_ids.end()) {
        allocation.service_ids.push_back(service_id);
      }
      break;
    }
  }
}

bool verify_disjointness(const Registry& registry) {
  const auto& allocations = registry.active_allocations;
  for (auto it1 = allocations.begin(); it1 != allocations.end(); ++it1) {
    for (auto it2 = std::next(it1); it2 != allocations.end(); ++it2) {
      const auto& a = it1->second;
      const auto& b = it2->second;
      std::set<CloudId> clouds_a(a.cloud_ids.begin(), a.cloud_ids.end());
      for (const auto& cid : b.cloud_ids) {
        if (clouds_a.count(cid) != 0) return false;
      }
      std::set<ServiceId> services_a(a.service_ids.begin(), a.service_ids.end());
      for (const auto& sid : b.service_ids) {
        if (services_a.count(sid) != 0) return false;
      }
    }
  }
  return true;
}

nlohmann::json registry_snapshot(const Registry& registry) {
  nlohmann::json j;
  j["version"] = "v1";
  j["kind"] = "registry";
  j["registry"] = registry;
  return j;
}

}  // namespace nimbus::alloc
