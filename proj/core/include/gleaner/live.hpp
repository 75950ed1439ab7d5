#pragma once

// Live mode: the wire protocol over loopback TCP with real worker processes
// and on-disk object caches.  Exercises the protocol and worker runtime
// outside the simulator; driven by the `live-smoke` CLI command and the
// acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

#include "gleaner/scenario.hpp"
#include "gleaner/types.hpp"

namespace gleaner {

// Live runs shrink the workload by this single factor: model seconds become
// milliseconds and gigabyte objects become megabyte files, so a smoke run
// finishes in seconds while keeping every ratio of the calibrated model.
inline constexpr double kLiveScale = 1000.0;

// Copy of `base` with every time constant divided by kLiveScale.  Sizes keep
// their nominal GB values; the live object store divides them by kLiveScale
// when it writes real bytes, so a 3.7 GB model becomes a 3.7 MB file.
WorkloadModel scale_workload_for_live(const WorkloadModel& base);

struct LiveSmokeOptions {
  std::uint32_t workers = 3;
  std::uint32_t tasks = 100;
  std::uint32_t batch = 10;
  ContextMode mode = ContextMode::Pervasive;
  bool kill_one = false;           // SIGKILL one busy worker at half completion
  std::uint32_t transfer_cap = 3;  // outbound streams per node, manager included
  std::int64_t timeout_ms = 60000;
  std::string work_dir;            // empty: fresh directory under the temp root
  bool keep_work_dir = false;      // leave caches on disk for inspection
};

struct LiveSmokeReport {
  bool passed = false;
  bool stalled = false;      // no workers left and tasks outstanding
  std::string failure;       // empty when passed
  std::uint32_t workers_joined = 0;
  std::uint32_t tasks_completed = 0;
  std::uint32_t duplicate_results = 0;  // stale Result frames discarded
  std::uint32_t requeues = 0;
  std::uint64_t materializations_total = 0;
  std::vector<std::uint64_t> per_worker_materializations;  // by worker id
  std::int64_t killed_worker = -1;  // -1 when no kill was performed
  std::int64_t elapsed_ms = 0;
  std::vector<std::string> log;  // manager-side progress lines
  std::string work_dir;          // populated when the directory is kept
};

// Spawns an in-process manager plus `workers` forked worker processes on
// loopback sockets and runs `tasks` batch-`batch` tasks through the full
// protocol: join, stage-in (manager- or peer-sourced), materialization,
// invocation, result.  Passing requires every task to complete exactly once
// and, in Pervasive mode, every joined worker to materialize its context
// exactly once.  With kill_one set, one busy worker is SIGKILLed at half
// completion and the run must still finish with exactly-once completion.
LiveSmokeReport live_smoke(const LiveSmokeOptions& options);

std::string live_smoke_report_text(const LiveSmokeReport& report);

}  // namespace gleaner
