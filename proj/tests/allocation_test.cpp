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

#include <random>

#include <gtest/gtest.h>

#include "nimbus/alloc/allocation.hpp"
#include "nimbus/core/error.hpp"
#include "nimbus/core/validate.hpp"
#include "testutil.hpp"

namespace nimbus {
namespace {

using alloc::CloudProposal;
using alloc::Lease;
using core::Registry;

Registry two_cloud_registry() {
  Registry registry;
  alloc::add_cloud(registry, test::cloud("C1", "unit",
                                         {test::service("s1", "unit"),
                                          test::service("s2", "unit")},
                                         8));
  alloc::add_cloud(registry, test::cloud("C2", "unit",
                                         {test::service("s3", "unit")}, 4));
  return registry;
}

core::ValidatedRequest request_for(const std::string& product,
                                   std::vector<std::string> techniques) {
  core::ConsumerRequest request;
  request.product = test::product(product, {{"m1", 1.0}});
  request.deadline = 100;
  request.techniques = std::move(techniques);
  std::vector<core::TechniqueSpec> catalog;
  for (const auto& id : request.techniques) {
    catalog.push_back(test::technique(id, 10.0, 3));
  }
  return core::validate_request(request, catalog);
}

TEST(RegisterService, AddsFreeServiceToCloud) {
  auto registry = two_cloud_registry();
  alloc::register_service(registry, test::service("s4", "unit"), "C1");
  const auto* cloud = registry.find_cloud("C1");
  ASSERT_EQ(cloud->services.size(), 3u);
  EXPECT_TRUE(cloud->services.back().state.is_free());
}

TEST(RegisterService, CloudFullAtMaxServices) {
  Registry registry;
  alloc::add_cloud(registry, test::cloud("C1", "unit",
                                         {test::service("s1", "unit"),
                                          test::service("s2", "unit")},
                                         2));
  try {
    alloc::register_service(registry, test::service("s3", "unit"), "C1");
    FAIL() << "expected CloudFull";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCloudFull);
  }
}

TEST(RegisterService, DuplicateIdAndTechniqueMismatch) {
  auto registry = two_cloud_registry();
  try {
    alloc::register_service(registry, test::service("s1", "unit"), "C1");
    FAIL() << "expected DuplicateServiceId";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateServiceId);
  }
  try {
    alloc::register_service(registry, test::service("s9", "perf"), "C1");
    FAIL() << "expected TechniqueMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTechniqueMismatch);
  }
}

TEST(FormClouds, OneProposalPerTechnique) {
  Registry registry;
  alloc::add_cloud(registry, test::cloud("F1", "functional",
                                         {test::service("f1", "functional")}, 2));
  alloc::add_cloud(registry, test::cloud("S1", "structural",
                                         {test::service("t1", "structural")}, 2));
  const auto proposals =
      alloc::form_clouds(registry, request_for("P1", {"functional", "structural"}));
  ASSERT_EQ(proposals.size(), 2u);  // y = 2
  EXPECT_EQ(proposals[0].technique_id, "functional");
  EXPECT_EQ(proposals[0].candidate_cloud_id, "F1");
  EXPECT_EQ(proposals[1].technique_id, "structural");
  EXPECT_EQ(proposals[1].candidate_cloud_id, "S1");
}

TEST(FormClouds, PicksMinimumLoadCloud) {
  const auto registry = two_cloud_registry();
  const auto proposals = alloc::form_clouds(
      registry, request_for("P1", {"unit"}), {{"C1", 5.0}, {"C2", 3.0}});
  ASSERT_EQ(proposals.size(), 1u);
  EXPECT_EQ(proposals[0].candidate_cloud_id, "C2");
  EXPECT_DOUBLE_EQ(proposals[0].current_load, 3.0);
}

TEST(FormClouds, TieBreaksByCloudId) {
  const auto registry = two_cloud_registry();
  const auto proposals = alloc::form_clouds(
      registry, request_for("P1", {"unit"}), {{"C1", 2.0}, {"C2", 2.0}});
  ASSERT_EQ(proposals.size(), 1u);
  EXPECT_EQ(proposals[0].candidate_cloud_id, "C1");
}

TEST(FormClouds, TechniqueUnavailableAndNoCapacity) {
  auto registry = two_cloud_registry();
  try {
    alloc::form_clouds(registry, request_for("P1", {"perf"}));
    FAIL() << "expected TechniqueUnavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTechniqueUnavailable);
    EXPECT_EQ(e.subject(), "perf");
  }

  // Lease everything, then the same request has no free capacity.
  auto proposals = alloc::form_clouds(registry, request_for("P1", {"unit"}));
  alloc::allocate(registry, proposals, "sm:P1", 0);
  alloc::mark_failed(registry, "s3");
  try {
    alloc::form_clouds(registry, request_for("P2", {"unit"}));
    FAIL() << "expected NoCapacity";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoCapacity);
  }
}

TEST(FormClouds, PureFunctionOfInputs) {
  const auto registry = two_cloud_registry();
  const auto request = request_for("P1", {"unit"});
  const std::map<core::CloudId, double> loads = {{"C1", 1.0}};
  EXPECT_EQ(alloc::form_clouds(registry, request, loads),
            alloc::form_clouds(registry, request, loads));
}

TEST(Allocate, ExclusiveLeaseConflict) {
  auto registry = two_cloud_registry();
  const auto p1 = alloc::form_clouds(registry, request_for("P1", {"unit"}));
  ASSERT_EQ(p1[0].candidate_cloud_id, "C1");
  alloc::allocate(registry, p1, "sm:P1", 0);

  // A proposal naming C1 obtained before P1's allocate now conflicts.
  auto stale = p1;
  stale[0].product_id = "P2";
  try {
    alloc::allocate(registry, stale, "sm:P2", 1);
    FAIL() << "expected AllocationConflict";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAllocationConflict);
  }
}

TEST(Allocate, LeasesEveryServiceInEveryNamedCloud) {
  Registry registry;
  alloc::add_cloud(registry, test::cloud("C1", "unit",
                                         {test::service("s1", "unit"),
                                          test::service("s2", "unit")},
                                         4));
  alloc::add_cloud(registry, test::cloud("C2", "perf",
                                         {test::service("s3", "perf")}, 4));
  const auto proposals =
      alloc::form_clouds(registry, request_for("P1", {"unit", "perf"}));
  const auto lease = alloc::allocate(registry, proposals, "sm:P1", 7);
  EXPECT_EQ(lease.allocation.cloud_count(), 2);
  EXPECT_EQ(lease.granted_at, 7);
  EXPECT_FALSE(lease.released);
  for (const auto& sid : {"s1", "s2", "s3"}) {
    const auto* cloud = registry.cloud_of_service(sid);
    EXPECT_TRUE(cloud->find_service(sid)->state.is_leased_to("P1")) << sid;
  }
}

TEST(Allocate, FailedAllocateLeavesRegistryByteIdentical) {
  auto registry = two_cloud_registry();
  const auto p1 = alloc::form_clouds(registry, request_for("P1", {"unit"}));
  // Conflict on C1 only after C2 would have been leased: proposals list C2
  // first so a non-atomic implementation would leak the C2 lease.
  auto p2 = alloc::form_clouds(registry, request_for("P2", {"unit"}),
                               {{"C1", 9.0}});
  ASSERT_EQ(p2[0].candidate_cloud_id, "C2");
  CloudProposal conflicting = p1[0];
  conflicting.product_id = "P2";
  std::vector<CloudProposal> mixed = {p2[0], conflicting};

  alloc::allocate(registry, p1, "sm:P1", 0);
  const auto before = alloc::registry_snapshot(registry).dump();
  EXPECT_THROW(alloc::allocate(registry, mixed, "sm:P2", 1), Error);
  EXPECT_EQ(alloc::registry_snapshot(registry).dump(), before);
}

TEST(Allocate, StaleProposalWhenSnapshottedServiceFailed) {
  auto registry = two_cloud_registry();
  auto proposals = alloc::form_clouds(registry, request_for("P1", {"unit"}));
  ASSERT_EQ(proposals[0].candidate_cloud_id, "C1");
  alloc::mark_failed(registry, "s1");
  try {
    alloc::allocate(registry, proposals, "sm:P1", 0);
    FAIL() << "expected StaleProposal";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStaleProposal);
    EXPECT_EQ(e.subject(), "s1");
  }
}

TEST(Allocate, SpawnsRequestedClonesUpToCap) {
  auto registry = two_cloud_registry();
  const auto proposals = alloc::form_clouds(registry, request_for("P1", {"unit"}));
  const auto lease = alloc::allocate(registry, proposals, "sm:P1", 0,
                                     {{"C1", alloc::CloneRequest{5, 2.0}}});
  const auto* cloud = registry.find_cloud("C1");
  EXPECT_EQ(cloud->services.size(), 5u);
  EXPECT_EQ(lease.allocation.service_ids.size(), 5u);
  for (const auto& service : cloud->services) {
    EXPECT_TRUE(service.state.is_leased_to("P1"));
  }
  EXPECT_DOUBLE_EQ(cloud->services.back().capacity, 2.0);
}

TEST(Release, RestoresCapacityForTheNextProduct) {
  auto registry = two_cloud_registry();
  auto proposals = alloc::form_clouds(registry, request_for("P1", {"unit"}));
  auto lease = alloc::allocate(registry, proposals, "sm:P1", 0);
  alloc::release(registry, lease);
  EXPECT_TRUE(lease.released);
  EXPECT_EQ(registry.active_product_count(), 0);

  auto again = alloc::form_clouds(registry, request_for("P2", {"unit"}));
  EXPECT_EQ(again[0].candidate_cloud_id, "C1");
  EXPECT_NO_THROW(alloc::allocate(registry, again, "sm:P2", 5));
}

TEST(Release, DoubleReleaseIsAnError) {
  auto registry = two_cloud_registry();
  auto proposals = alloc::form_clouds(registry, request_for("P1", {"unit"}));
  auto lease = alloc::allocate(registry, proposals, "sm:P1", 0);
  alloc::release(registry, lease);
  try {
    alloc::release(registry, lease);
    FAIL() << "expected AlreadyReleased";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlreadyReleased);
  }
}

TEST(Release, FailedMemberStaysFailedAwaitingRecovery) {
  auto registry = two_cloud_registry();
  auto proposals = alloc::form_clouds(registry, request_for("P1", {"unit"}));
  auto lease = alloc::allocate(registry, proposals, "sm:P1", 0);
  alloc::mark_failed(registry, "s1");
  alloc::release(registry, lease);
  const auto* cloud = registry.find_cloud("C1");
  EXPECT_TRUE(cloud->find_service("s1")->state.is_failed());
  EXPECT_TRUE(cloud->find_service("s2")->state.is_free());
  alloc::mark_recovered(registry, "s1");
  EXPECT_TRUE(cloud->find_service("s1")->state.is_free());
}

TEST(VerifyDisjointness, HoldsForDistinctCloudsAndEmptyRegistry) {
  Registry empty;
  EXPECT_TRUE(alloc::verify_disjointness(empty));

  auto registry = two_cloud_registry();
  auto p1 = alloc::form_clouds(registry, request_for("P1", {"unit"}));
  alloc::allocate(registry, p1, "sm:P1", 0);
  auto p2 = alloc::form_clouds(registry, request_for("P2", {"unit"}));
  alloc::allocate(registry, p2, "sm:P2", 0);
  EXPECT_TRUE(alloc::verify_disjointness(registry));
}

TEST(VerifyDisjointness, DetectsCorruptedState) {
  auto registry = two_cloud_registry();
  core::ProductAllocation a1{"P1", "sm:P1", {"C1"}, {"s1", "s2"}};
  core::ProductAllocation a2{"P2", "sm:P2", {"C1"}, {"s1"}};
  registry.active_allocations = {{"P1", a1}, {"P2", a2}};
  EXPECT_FALSE(alloc::verify_disjointness(registry));
}

// Random interleavings of form/allocate/release across contending products.
// The full-size fuzz lives in the acceptance suite; this one runs quickly.
TEST(DisjointnessFuzz, RandomInterleavings) {
  std::mt19937_64 rng(20260810);
  for (int round = 0; round < 50; ++round) {
    Registry registry;
    const int clouds = 3 + static_cast<int>(rng() % 3);
    for (int c = 0; c < clouds; ++c) {
      alloc::add_cloud(
          registry,
          test::cloud("C" + std::to_string(c), "unit",
                      {test::service("C" + std::to_string(c) + "a", "unit")},
                      2));
    }
    std::map<std::string, Lease> held;
    for (int step = 0; step < 60; ++step) {
      const std::string product = "P" + std::to_string(rng() % 4);
      try {
        if (held.count(product) != 0 && rng() % 2 == 0) {
          alloc::release(registry, held.at(product));
          held.erase(product);
        } else if (held.count(product) == 0) {
          auto proposals =
              alloc::form_clouds(registry, request_for(product, {"unit"}));
          held.emplace(product,
                       alloc::allocate(registry, proposals, "sm:" + product,
                                       step));
        }
      } catch (const Error&) {
        // contention is expected; the invariant must hold regardless
      }
      ASSERT_TRUE(alloc::verify_disjointness(registry))
          << "round " << round << " step " << step;
    }
  }
}

// For any request whose techniques are served, repeated form->allocate after
// each competitor release succeeds within a bounded number of rounds.
TEST(Liveness, RetryAfterReleaseEventuallySucceeds) {
  auto registry = two_cloud_registry();
  std::vector<std::string> waiting = {"P1", "P2", "P3"};
  std::map<std::string, Lease> held;
  int rounds = 0;
  while (!waiting.empty() && rounds < 10) {
    ++rounds;
    std::vector<std::string> still_waiting;
    for (const auto& product : waiting) {
      try {
        auto proposals =
            alloc::form_clouds(registry, request_for(product, {"unit"}));
        held.emplace(product, alloc::allocate(registry, proposals,
                                              "sm:" + product, rounds));
      } catch (const Error&) {
        still_waiting.push_back(product);
      }
    }
    // Winners finish and release before the next round.
    for (auto& [product, lease] : held) {
      if (!lease.released) alloc::release(registry, lease);
    }
    waiting = std::move(still_waiting);
  }
  EXPECT_TRUE(waiting.empty()) << "starved after " << rounds << " rounds";
  EXPECT_LE(rounds, 3);  // <= H retries with H = 3 contenders
}

}  // namespace
}  // namespace nimbus
