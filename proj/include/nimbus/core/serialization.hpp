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

#include <nlohmann/json.hpp>

#include "nimbus/core/types.hpp"

// JSON bindings for the domain types. All on-disk formats are versioned
// ("v1") at the file level; these bindings cover the payload objects.
// Serialization is deterministic: nlohmann keeps object keys sorted.

namespace nimbus::core {

using nlohmann::json;

void to_json(json& j, const ModuleSpec& m);
void from_json(const json& j, ModuleSpec& m);

void to_json(json& j, const ProductSpec& p);
void from_json(const json& j, ProductSpec& p);

void to_json(json& j, const ConsumerRequest& r);
void from_json(const json& j, ConsumerRequest& r);

void to_json(json& j, const TechniqueSpec& t);
void from_json(const json& j, TechniqueSpec& t);

void to_json(json& j, const ServiceState& s);
void from_json(const json& j, ServiceState& s);

void to_json(json& j, const TestingService& s);
void from_json(const json& j, TestingService& s);

void to_json(json& j, const TestingCloud& c);
void from_json(const json& j, TestingCloud& c);

void to_json(json& j, const ProductAllocation& a);
void from_json(const json& j, ProductAllocation& a);

void to_json(json& j, const Registry& r);
void from_json(const json& j, Registry& r);

void to_json(json& j, const ValidatedRequest& v);
void from_json(const json& j, ValidatedRequest& v);

}  // namespace nimbus::core
