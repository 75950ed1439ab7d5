#pragma once

// Experiment harness: named presets for the measurement ladder, batch sweeps,
// artifact writers (summary.csv / series.csv / histograms.csv / events.bin),
// and the calibration routine behind the `calibrate` command.

#include <cstdint>
#include <string>
#include <vector>

#include "gleaner/metrics.hpp"
#include "gleaner/scenario.hpp"
#include "gleaner/sim.hpp"

namespace gleaner {

// Preset catalog.
//   pv0           1 reference worker, pervasive, B=100 (baseline)
//   pv1           naive staging, bundled 10.5 GB package, B=100, 20 workers
//   pv2           naive staging, trimmed 3.7 GB package, B=100
//   pv3_<B>       partial (cache, fresh load per task), B as given
//   pv4_<B>       pervasive (cache + resident library), B as given
//   pv5s / pv5p   eviction drain (15 min warmup, 1 worker/min, fast class
//                 first) over pervasive B=100 / partial B=1000
//   pv6           pervasive B=100 on a fluctuating 11..64-worker pool
//                 (illustrative envelope, not a recorded-day replay)
// Throws std::invalid_argument for unknown names.
ScenarioConfig resolve_preset(const std::string& name, std::uint64_t seed = 0);

// The full ladder in canonical order (used for golden summary runs).
std::vector<std::string> preset_ladder();

struct ExperimentPlan {
  std::vector<std::string> presets;   // resolved via resolve_preset
  std::uint64_t seed = 0;
  std::string output_dir;             // created if missing
  bool write_events = true;           // events.bin per run
};

struct PlanResult {
  std::vector<RunSummary> summaries;
  bool any_stalled = false;
};

// Runs every preset in the plan, writing per-run events.bin plus aggregated
// summary.csv, series.csv and histograms.csv under output_dir.
PlanResult run_plan(const ExperimentPlan& plan);

// Runs one fully-specified scenario (same artifact layout).
RunSummary run_single(const ScenarioConfig& config, const std::string& run_id,
                      const std::string& output_dir, bool write_events = true);

struct SweepRow {
  std::uint32_t batch = 0;
  double makespan_s = 0.0;
};
struct SweepResult {
  ContextMode mode = ContextMode::Partial;
  std::vector<SweepRow> rows;        // batch ascending
  std::uint32_t optimal_batch = 0;   // smallest makespan
};

// One scenario per batch size on the 20-worker reference pool, shared seed.
// Writes sweep.csv under output_dir when non-empty.
SweepResult sweep_batch(ContextMode mode,
                        const std::vector<std::uint32_t>& batches,
                        std::uint64_t seed, const std::string& output_dir);

// Completed inferences of both runs at the drain end (last eviction in the
// scenario trace), and their gap (first minus second).
struct DrainComparison {
  EngineMs drain_end_ms = 0;
  std::uint64_t completed_a = 0;
  std::uint64_t completed_b = 0;
  std::int64_t gap = 0;
};
DrainComparison compare_at_drain_end(const ScenarioConfig& scenario_a,
                                     const RunSummary& a, const RunSummary& b);

struct CalibrationReport {
  double t_inf_ref_fit = 0.0;
  double slow_speed_fit = 0.0;
  double frozen_t_inf_ref = 0.0;
  double frozen_slow_speed = 0.0;
  double pv0_makespan = 0.0;      // with frozen constants
  double pv4_100_makespan = 0.0;  // with frozen constants
  bool within_tolerance = false;  // both targets within 2%
};

// Re-derives the fitted constants from the simulator, checks the frozen
// values still reproduce the reference targets, and writes the constants
// file to `constants_path` (skipped when empty).
CalibrationReport calibrate(const std::string& constants_path);

// CSV writers (byte-stable formatting).
std::string summary_csv_header();
std::string summary_csv_row(const RunSummary& s);
void write_summary_csv(const std::string& path,
                       const std::vector<RunSummary>& summaries);
void write_series_csv(const std::string& path,
                      const std::vector<RunSummary>& summaries);
void write_histograms_csv(const std::string& path,
                          const std::vector<RunSummary>& summaries);

// Output root: $GLEANER_OUTPUT_ROOT or "./out".
std::string default_output_root();

}  // namespace gleaner
