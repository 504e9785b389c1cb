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

#include <stdexcept>
#include <string>
#include <string_view>

namespace nimbus {

// Every recoverable failure in the framework is classified under exactly one
// of these codes. Callers that care about the failure class catch Error and
// switch on code(); the message is for humans.
enum class ErrorCode {
  kUnknownTechnique,
  kInvalidField,
  kEmptyProduct,
  kCloudFull,
  kTechniqueMismatch,
  kDuplicateServiceId,
  kDuplicateCloudId,
  kUnknownCloud,
  kTechniqueUnavailable,
  kNoCapacity,
  kAllocationConflict,
  kStaleProposal,
  kAlreadyReleased,
  kNoServices,
  kServiceFailure,
  kRunnerError,
  kEmptyReportSet,
  kOutputStandardViolation,
  kMixedCloud,
  kMissingCloudReport,
  kScenarioInvalid,
  kParseError,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string subject, const std::string& message)
      : std::runtime_error(message), code_(code), subject_(std::move(subject)) {}

  ErrorCode code() const { return code_; }

  // The offending id (technique, service, cloud, field name, ...).
  const std::string& subject() const { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

[[noreturn]] void throw_error(ErrorCode code, std::string subject,
                              const std::string& message);

}  // namespace nimbus
