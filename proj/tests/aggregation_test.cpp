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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "nimbus/agg/aggregation.hpp"
#include "nimbus/core/error.hpp"

namespace nimbus {
namespace {

using agg::Etr;
using agg::FinalReport;
using agg::OutputStandard;
using exec::Eptr;
using nlohmann::json;

Eptr eptr(const std::string& service, const std::string& task,
          std::int64_t cases, std::int64_t defects, core::Tick time,
          core::Tick finished) {
  return Eptr{service, task, cases, defects, time, finished};
}

const std::map<std::string, std::string> kServiceCloud = {
    {"s1", "C1"}, {"s2", "C1"}, {"s3", "C2"}};

TEST(OutputStandardCheck, PassesWhenAllFieldsPresent) {
  const OutputStandard standard;
  const json record = eptr("s1", "t1", 10, 2, 30, 40);
  EXPECT_TRUE(agg::validate_output_standard(record, standard).empty());
}

TEST(OutputStandardCheck, ListsEveryMissingField) {
  const OutputStandard standard;
  json record = eptr("s1", "t1", 10, 2, 30, 40);
  record.erase("defects_found");
  auto violations = agg::validate_output_standard(record, standard);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0], "missing:defects_found");

  record.erase("time_spent");
  violations = agg::validate_output_standard(record, standard);
  EXPECT_EQ(violations.size(), 2u);
}

TEST(OutputStandardCheck, ExtraFieldsTolerableByDefault) {
  OutputStandard standard;
  json record = eptr("s1", "t1", 10, 2, 30, 40);
  record["environment"] = "staging";
  EXPECT_TRUE(agg::validate_output_standard(record, standard).empty());

  standard.allow_extra = false;
  const auto violations = agg::validate_output_standard(record, standard);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0], "extra:environment");
}

TEST(MergeEptrs, SumsTheThreeOutputFields) {
  const std::vector<Eptr> eptrs = {eptr("s1", "t1", 10, 2, 30, 50),
                                   eptr("s2", "t2", 15, 1, 45, 65)};
  const auto etr =
      agg::merge_eptrs("C1", "unit", eptrs, OutputStandard{}, kServiceCloud, 20);
  EXPECT_EQ(etr.total_cases, 25);
  EXPECT_EQ(etr.total_defects, 3);
  EXPECT_EQ(etr.cpu_time, 75);
  EXPECT_EQ(etr.elapsed, 45);  // max finished 65 - cloud start 20
  EXPECT_EQ(etr.eptr_count, 2);
}

TEST(MergeEptrs, EmptySetIsAnError) {
  try {
    agg::merge_eptrs("C1", "unit", {}, OutputStandard{}, kServiceCloud, 0);
    FAIL() << "expected EmptyReportSet";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyReportSet);
  }
}

TEST(MergeEptrs, StandardViolationPoisonsTheWholeMerge) {
  OutputStandard standard;
  standard.required_fields.push_back("env_fingerprint");  // never emitted
  try {
    agg::merge_eptrs("C1", "unit", {eptr("s1", "t1", 10, 2, 30, 40)}, standard,
                     kServiceCloud, 0);
    FAIL() << "expected OutputStandardViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutputStandardViolation);
    EXPECT_EQ(e.subject(), "s1");
  }
}

TEST(MergeEptrs, RejectsReportsSpanningClouds) {
  const std::vector<Eptr> eptrs = {eptr("s1", "t1", 10, 2, 30, 40),
                                   eptr("s3", "t2", 5, 0, 15, 45)};
  try {
    agg::merge_eptrs("C1", "unit", eptrs, OutputStandard{}, kServiceCloud, 0);
    FAIL() << "expected MixedCloud";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMixedCloud);
    EXPECT_EQ(e.subject(), "s3");
  }
}

TEST(MergeEptrs, OrderIndependent) {
  std::vector<Eptr> eptrs = {eptr("s1", "t1", 10, 2, 30, 50),
                             eptr("s2", "t2", 15, 1, 45, 65),
                             eptr("s1", "t3", 7, 0, 21, 71)};
  const auto reference =
      agg::merge_eptrs("C1", "unit", eptrs, OutputStandard{}, kServiceCloud, 0);
  std::sort(eptrs.begin(), eptrs.end(),
            [](const Eptr& a, const Eptr& b) { return a.task_id > b.task_id; });
  do {
    EXPECT_EQ(agg::merge_eptrs("C1", "unit", eptrs, OutputStandard{},
                               kServiceCloud, 0),
              reference);
  } while (std::next_permutation(eptrs.begin(), eptrs.end(),
                                 [](const Eptr& a, const Eptr& b) {
                                   return a.task_id < b.task_id;
                                 }));
}

Etr make_etr(const std::string& cloud, std::int64_t cases, std::int64_t defects,
             core::Tick cpu, core::Tick elapsed) {
  Etr etr;
  etr.cloud_id = cloud;
  etr.technique_id = "unit";
  etr.total_cases = cases;
  etr.total_defects = defects;
  etr.cpu_time = cpu;
  etr.elapsed = elapsed;
  etr.eptr_count = 1;
  return etr;
}

TEST(IntegrateEtrs, GrandTotalsAndDeadline) {
  const std::vector<Etr> etrs = {make_etr("C1", 25, 3, 75, 80),
                                 make_etr("C2", 40, 5, 120, 90)};
  const auto report =
      agg::integrate_etrs("P1", etrs, 100, {}, {"C1", "C2"}, {});
  EXPECT_EQ(report.grand_total_cases, 65);
  EXPECT_EQ(report.grand_total_defects, 8);
  EXPECT_EQ(report.grand_cpu_time, 195);
  EXPECT_TRUE(report.deadline_met);

  const auto late = agg::integrate_etrs("P1", etrs, 85, {}, {"C1", "C2"}, {});
  EXPECT_FALSE(late.deadline_met);
}

TEST(IntegrateEtrs, AbortedCloudIsNotMissing) {
  const std::vector<Etr> etrs = {make_etr("C1", 25, 3, 75, 80)};
  const auto report =
      agg::integrate_etrs("P1", etrs, 100, {}, {"C1", "C2"}, {"C2"});
  EXPECT_EQ(report.aborted_clouds, std::vector<std::string>{"C2"});
  EXPECT_EQ(report.grand_total_cases, 25);
}

TEST(IntegrateEtrs, SilentlyAbsentCloudIsAnError) {
  const std::vector<Etr> etrs = {make_etr("C1", 25, 3, 75, 80)};
  try {
    agg::integrate_etrs("P1", etrs, 100, {}, {"C1", "C2"}, {});
    FAIL() << "expected MissingCloudReport";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingCloudReport);
    EXPECT_EQ(e.subject(), "C2");
  }
}

TEST(IntegrateEtrs, ExceptionLogCopiedVerbatim) {
  fault::FaultRecord record;
  record.time = 12;
  record.kind = fault::ExceptionKind::kServiceFailure;
  record.subject = "s1";
  record.action = fault::RecoveryAction::kReassign;
  record.attempt = 0;
  record.product_id = "P1";
  const auto report = agg::integrate_etrs(
      "P1", {make_etr("C1", 1, 0, 3, 3)}, 10, {record}, {"C1"}, {});
  ASSERT_EQ(report.exception_log.size(), 1u);
  EXPECT_EQ(report.exception_log[0], record);
}

// Conservation chain on random report sets: report totals == sum of ETRs ==
// sum of EPTRs.
TEST(Aggregation, ConservationChainOverRandomReports) {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 100; ++round) {
    const int clouds = 1 + static_cast<int>(rng() % 3);
    std::vector<Etr> etrs;
    std::vector<std::string> expected;
    std::int64_t eptr_cases = 0, eptr_defects = 0;
    core::Tick eptr_time = 0;
    for (int c = 0; c < clouds; ++c) {
      const std::string cloud = "C" + std::to_string(c);
      expected.push_back(cloud);
      std::map<std::string, std::string> service_cloud;
      std::vector<Eptr> eptrs;
      const int n = 1 + static_cast<int>(rng() % 5);
      for (int i = 0; i < n; ++i) {
        const std::string service = cloud + "s" + std::to_string(i);
        service_cloud[service] = cloud;
        const auto cases = static_cast<std::int64_t>(rng() % 50);
        const auto defects = cases == 0 ? 0 : static_cast<std::int64_t>(
                                                  rng() % (cases + 1));
        const auto time = static_cast<core::Tick>(rng() % 200);
        eptrs.push_back(eptr(service, "t" + std::to_string(i), cases, defects,
                             time, static_cast<core::Tick>(rng() % 300)));
        eptr_cases += cases;
        eptr_defects += defects;
        eptr_time += time;
      }
      etrs.push_back(agg::merge_eptrs(cloud, "unit", eptrs, OutputStandard{},
                                      service_cloud, 0));
    }
    const auto report = agg::integrate_etrs("P1", etrs, 1000, {}, expected, {});
    EXPECT_EQ(report.grand_total_cases, eptr_cases);
    EXPECT_EQ(report.grand_total_defects, eptr_defects);
    EXPECT_EQ(report.grand_cpu_time, eptr_time);
  }
}

TEST(Aggregation, EtrAndFinalReportRoundTrip) {
  const auto etr = make_etr("C1", 25, 3, 75, 80);
  const json je = etr;
  EXPECT_EQ(je.get<Etr>(), etr);

  fault::FaultRecord record;
  record.kind = fault::ExceptionKind::kTaskTimeout;
  record.action = fault::RecoveryAction::kRetry;
  record.subject = "t1";
  record.product_id = "P1";
  const auto report = agg::integrate_etrs("P1", {etr}, 100, {record}, {"C1"},
                                          {});
  const json jr = report;
  EXPECT_EQ(jr.get<FinalReport>(), report);
}

}  // namespace
}  // namespace nimbus
