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

#include "nimbus/core/validate.hpp"

#include <set>

#include "nimbus/core/error.hpp"

namespace nimbus::core {

void check_technique_spec(const TechniqueSpec& spec) {
  if (spec.technique_id.empty()) {
    throw_error(ErrorCode::kInvalidField, "technique_id", "technique_id must be nonempty");
  }
  if (!(spec.test_case_density > 0.0)) {
    throw_error(ErrorCode::kInvalidField, "test_case_density",
                "test_case_density must be > 0 for technique " + spec.technique_id);
  }
  if (spec.avg_case_time <= 0) {
    throw_error(ErrorCode::kInvalidField, "avg_case_time",
                "avg_case_time must be > 0 for technique " + spec.technique_id);
  }
  if (!(spec.avg_case_size > 0.0)) {
    throw_error(ErrorCode::kInvalidField, "avg_case_size",
                "avg_case_size must be > 0 for technique " + spec.technique_id);
  }
}

void check_product_spec(const ProductSpec& product) {
  if (product.product_id.empty()) {
    throw_error(ErrorCode::kInvalidField, "product_id", "product_id must be nonempty");
  }
  if (product.modules.empty()) {
    throw_error(ErrorCode::kEmptyProduct, product.product_id,
                "product " + product.product_id + " has no modules");
  }
  std::set<ModuleId> seen;
  for (const auto& module : product.modules) {
    if (module.module_id.empty()) {
      throw_error(ErrorCode::kInvalidField, "module_id",
                  "module_id must be nonempty in product " + product.product_id);
    }
    if (!seen.insert(module.module_id).second) {
      throw_error(ErrorCode::kInvalidField, "module_id",
                  "duplicate module_id " + module.module_id + " in product " +
                      product.product_id);
    }
    if (!(module.size_kloc > 0.0)) {
      throw_error(ErrorCode::kInvalidField, "size_kloc",
                  "size_kloc must be > 0 for module " + module.module_id);
    }
  }
  if (product.defect_density_estimate < 0.0) {
    throw_error(ErrorCode::kInvalidField, "defect_density_estimate",
                "defect_density_estimate must be >= 0 for product " +
                    product.product_id);
  }
}

ValidatedRequest validate_request(const ConsumerRequest& request,
                                  const std::vector<TechniqueSpec>& catalog) {
  check_product_spec(request.product);
  if (request.deadline <= 0) {
    throw_error(ErrorCode::kInvalidField, "deadline", "deadline must be > 0");
  }
  if (request.techniques.empty()) {
    throw_error(ErrorCode::kInvalidField, "techniques",
                "request must name at least one technique");
  }
  std::set<TechniqueId> seen;
  ValidatedRequest out;
  out.request = request;
  for (const auto& id : request.techniques) {
    if (!seen.insert(id).second) {
      throw_error(ErrorCode::kInvalidField, "techniques",
                  "duplicate technique " + id + " in request");
    }
    const TechniqueSpec* found = nullptr;
    for (const auto& spec : catalog) {
      if (spec.technique_id == id) {
        found = &spec;
        break;
      }
    }
    if (found == nullptr) {
      throw_error(ErrorCode::kUnknownTechnique, id,
                  "technique " + id + " not in catalog");
    }
    check_technique_spec(*found);
    out.resolved.push_back(*found);
  }
  return out;
}

}  // namespace nimbus::core
