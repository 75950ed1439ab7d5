#pragma once

// Event-log reduction into run observables: makespan, task-time statistics,
// completed-inference and connected-worker series, eviction accounting, and
// histograms.  Pure functions of the log: re-summarizing is bit-identical.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gleaner/event_log.hpp"

namespace gleaner {

enum class RunStatus : std::uint8_t { Completed, Stalled, Unknown };
const char* run_status_name(RunStatus status);

struct DistStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double std_dev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct RunSummary {
  std::string run_id;
  RunStatus status = RunStatus::Unknown;
  // First dispatch eligibility to last completion, seconds.
  double makespan_s = 0.0;
  // Per completed attempt, from InvocationStarted (comparable to resident-
  // context measurements) and from TaskDispatched (includes context wait).
  DistStats task_time;
  DistStats task_time_incl_wait;
  std::vector<std::pair<EngineMs, std::uint64_t>> completed_inferences_series;
  std::vector<std::pair<EngineMs, std::uint32_t>> connected_workers_series;
  double avg_connected_workers = 0.0;  // time-weighted over the log span
  std::uint64_t evictions = 0;
  std::uint64_t inferences_lost = 0;  // sum of batch sizes of killed tasks
  std::uint64_t materializations = 0;
  std::uint64_t tasks_completed = 0;
  std::uint64_t completed_inferences = 0;
  // Raw per-attempt task times (seconds) for histogram building.
  std::vector<double> task_times_s;
  std::vector<std::uint32_t> task_batches;
};

// Throws std::runtime_error (mentioning the sequence number) on a malformed
// log: non-contiguous sequence numbers or time regressions.
RunSummary summarize(const std::vector<EventRecord>& log);

// Cumulative completed inferences at `time` (inclusive) per the series.
std::uint64_t completed_inferences_at(const RunSummary& summary, EngineMs time);

struct Histogram {
  double bucket_width = 0.0;
  // (bucket lower bound, count); buckets with zero count are omitted.
  std::vector<std::pair<double, std::uint64_t>> buckets;
  std::uint64_t trimmed = 0;  // values above trim_above, reported separately
};

Histogram histogram(const std::vector<double>& values, double bucket_width,
                    double trim_above);

}  // namespace gleaner
