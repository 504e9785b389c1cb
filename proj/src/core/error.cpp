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

#include "nimbus/core/error.hpp"

namespace nimbus {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownTechnique: return "UnknownTechnique";
    case ErrorCode::kInvalidField: return "InvalidField";
    case ErrorCode::kEmptyProduct: return "EmptyProduct";
    case ErrorCode::kCloudFull: return "CloudFull";
    case ErrorCode::kTechniqueMismatch: return "TechniqueMismatch";
    case ErrorCode::kDuplicateServiceId: return "DuplicateServiceId";
    case ErrorCode::kDuplicateCloudId: return "DuplicateCloudId";
    case ErrorCode::kUnknownCloud: return "UnknownCloud";
    case ErrorCode::kTechniqueUnavailable: return "TechniqueUnavailable";
    case ErrorCode::kNoCapacity: return "NoCapacity";
    case ErrorCode::kAllocationConflict: return "AllocationConflict";
    case ErrorCode::kStaleProposal: return "StaleProposal";
    case ErrorCode::kAlreadyReleased: return "AlreadyReleased";
    case ErrorCode::kNoServices: return "NoServices";
    case ErrorCode::kServiceFailure: return "ServiceFailure";
    case ErrorCode::kRunnerError: return "RunnerError";
    case ErrorCode::kEmptyReportSet: return "EmptyReportSet";
    case ErrorCode::kOutputStandardViolation: return "OutputStandardViolation";
    case ErrorCode::kMixedCloud: return "MixedCloud";
    case ErrorCode::kMissingCloudReport: return "MissingCloudReport";
    case ErrorCode::kScenarioInvalid: return "ScenarioInvalid";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

void throw_error(ErrorCode code, std::string subject, const std::string& message) {
  throw Error(code, std::move(subject), std::string(error_code_name(code)) + ": " + message);
}

}  // namespace nimbus
