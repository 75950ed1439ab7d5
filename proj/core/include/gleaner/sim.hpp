#pragma once

// Deterministic discrete-event backend: drives the scheduler and worker
// runtime against an availability trace under the workload cost model.
// Single-threaded; events fire in (time, sequence) order and the clock never
// decreases.  Identical (scenario, seed) inputs yield byte-identical event
// logs.

#include <vector>

#include "gleaner/event_log.hpp"
#include "gleaner/metrics.hpp"
#include "gleaner/scenario.hpp"

namespace gleaner {

struct RunOutput {
  RunStatus status = RunStatus::Unknown;
  std::vector<InvocationResult> results;  // completed tasks, completion order
  EventLog log;
  RunSummary summary;
};

// Runs the scenario to completion or to a stall (trace exhausted with an
// empty pool and work remaining).  Dispatch begins once start_threshold of
// the initial join wave is connected.  Throws std::invalid_argument listing
// the violations when the scenario fails validation.
RunOutput run_scenario(const ScenarioConfig& config);

// Analytic makespan (seconds) for homogeneous, churn-free pools; the oracle
// the simulator is checked against.  Requires a single join wave at t=0 with
// one speed, no evictions, transfer_cap >= worker count (parallel staging),
// and Partial or Pervasive mode; throws std::invalid_argument otherwise.
//
//   Partial:   t_stage + ceil(K/W) * (t_load + oh + B * t_inf_cold / s)
//   Pervasive: t_stage + t_load + ceil(K/W) * (oh + B * t_inf / s)
//
// where t_inf_cold carries the cold-load per-inference penalty.
double closed_form_makespan(const ScenarioConfig& config);

}  // namespace gleaner
