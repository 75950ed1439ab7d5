#pragma once

// Availability-trace construction: static pools, the scripted drain used by
// the busy-cluster scenario, stochastic fluctuation, and CSV replay.
//
// Trace CSV format (one event per line, documented header):
//   time_ms,action,worker_id,gpu_model,speed_factor
// where action is "join" or "evict"; gpu_model/speed_factor are empty for
// evict rows.

#include <string>
#include <vector>

#include "gleaner/scenario.hpp"

namespace gleaner {

// A worker pool as a list of GPU classes; expanded to per-worker joins in
// class order with ascending worker ids.
using PoolSpec = std::vector<GpuClass>;

// All workers join at t=0.
AvailabilityTrace make_static_trace(const PoolSpec& pool);

// All joins at t=0; evictions start at `warmup_minutes`, one per
// 1/rate_per_minute interval, fastest GPU classes first (descending
// speed_factor, ascending worker id within a class).
AvailabilityTrace make_drain_trace(const PoolSpec& pool, double warmup_minutes,
                                   double rate_per_minute);

// Two-state per-slot renewal process: `min_workers` slots are pinned joined
// for the whole trace; the remaining max-min slots alternate joined/absent
// with exponential dwell times of the given mean.  Instantaneous pool size
// stays within [min_workers, max_workers].  Deterministic per seed (inverse
// CDF sampling; no library distribution objects).
AvailabilityTrace make_fluctuating_trace(std::uint64_t seed,
                                         std::uint32_t min_workers,
                                         std::uint32_t max_workers,
                                         double mean_dwell_minutes,
                                         double duration_minutes,
                                         const GpuClass& shape);

std::string trace_to_csv(const AvailabilityTrace& trace);
AvailabilityTrace trace_from_csv(const std::string& text);

}  // namespace gleaner
