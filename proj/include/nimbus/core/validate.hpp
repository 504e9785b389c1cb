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

#include <vector>

#include "nimbus/core/types.hpp"

namespace nimbus::core {

// Checks a technique spec's own invariants (all numeric fields > 0).
// Throws Error(kInvalidField) naming the offending field.
void check_technique_spec(const TechniqueSpec& spec);

// Checks a product spec's own invariants: nonempty id, nonempty module list,
// unique module ids, sizes > 0, defect density >= 0.
void check_product_spec(const ProductSpec& product);

// Service Reception: analyzes the request and resolves each technique
// against the catalog. Rejects rather than silently repairing. Validation is
// idempotent: re-validating a ValidatedRequest's underlying request yields an
// equal result.
//
// Throws Error with code kUnknownTechnique, kInvalidField or kEmptyProduct.
ValidatedRequest validate_request(const ConsumerRequest& request,
                                  const std::vector<TechniqueSpec>& catalog);

}  // namespace nimbus::core
