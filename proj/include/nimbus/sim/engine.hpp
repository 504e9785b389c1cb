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

#include "nimbus/sim/scenario.hpp"
#include "nimbus/sim/trace.hpp"

namespace nimbus::sim {

// Runs a scenario on the deterministic discrete-event network to quiescence.
// Events dequeue in (time, insertion-seq) order; components interact only
// via enqueued messages on one strictly single-threaded loop. Every request
// ends in a FinalReport or a classified terminal fault; the exclusivity
// invariant is re-verified after every event.
//
// Throws Error(kScenarioInvalid) naming the first violated constraint.
SimResult run_simulation(const Scenario& scenario);

}  // namespace nimbus::sim
