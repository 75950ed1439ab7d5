// Command-line front end: experiment runs (presets or scenario files), batch
// sweeps, availability-trace generation and replay, live-mode smoke runs, and
// the calibration check.  Exit codes: 0 ok, 1 failure, 2 stalled run,
// 3 invalid scenario or arguments.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gleaner/calibration.hpp"
#include "gleaner/harness.hpp"
#include "gleaner/live.hpp"
#include "gleaner/scenario.hpp"
#include "gleaner/sim.hpp"
#include "gleaner/trace.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitStalled = 2;
constexpr int kExitInvalid = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void print_summary_line(const gleaner::RunSummary& s) {
  std::printf("%-10s %-9s makespan=%.1f s  tasks=%" PRIu64
              "  inferences=%" PRIu64 "  materializations=%" PRIu64
              "  evictions=%" PRIu64 "  avg_workers=%.2f\n",
              s.run_id.c_str(), gleaner::run_status_name(s.status),
              s.makespan_s, s.tasks_completed, s.completed_inferences,
              s.materializations, s.evictions, s.avg_connected_workers);
}

gleaner::PoolSpec named_pool(const std::string& name) {
  if (name == "single")
    return {{gleaner::calib::kReferenceGpu, 1.0, 1, 2021}};
  if (name == "reference20") return gleaner::reference_pool_20();
  if (name == "cluster427") return gleaner::cluster_pool_427();
  throw std::invalid_argument("unknown pool: " + name +
                              " (single, reference20, cluster427)");
}

struct RunArgs {
  std::vector<std::string> presets;
  std::vector<std::string> scenario_files;
  std::string compare;
  std::uint64_t seed = 0;
  std::string output_dir;
  bool no_events = false;
};

int cmd_run(const RunArgs& a) {
  std::vector<gleaner::ScenarioConfig> configs;
  for (const std::string& name : a.presets)
    configs.push_back(gleaner::resolve_preset(name, a.seed));
  // A scenario file is authoritative: its fields (seed included) win over
  // command-line flags.
  for (const std::string& file : a.scenario_files)
    configs.push_back(gleaner::scenario_from_json(slurp(file)));
  if (configs.empty()) {
    std::fprintf(stderr, "run: give at least one --preset or --scenario\n");
    return kExitInvalid;
  }
  if (!a.compare.empty() && configs.size() != 1) {
    std::fprintf(stderr, "run: --compare needs exactly one base run\n");
    return kExitInvalid;
  }
  for (const gleaner::ScenarioConfig& cfg : configs) {
    std::vector<std::string> errors = gleaner::validate_scenario(cfg);
    if (!errors.empty()) {
      for (const std::string& e : errors)
        std::fprintf(stderr, "%s: %s\n", cfg.name.c_str(), e.c_str());
      return kExitInvalid;
    }
  }

  fs::create_directories(a.output_dir);
  std::vector<gleaner::RunSummary> summaries;
  bool any_stalled = false;
  for (const gleaner::ScenarioConfig& cfg : configs) {
    gleaner::RunSummary s =
        gleaner::run_single(cfg, cfg.name, a.output_dir, !a.no_events);
    any_stalled |= s.status != gleaner::RunStatus::Completed;
    print_summary_line(s);
    summaries.push_back(std::move(s));
  }
  if (!a.compare.empty()) {
    gleaner::ScenarioConfig other = gleaner::resolve_preset(a.compare, a.seed);
    gleaner::RunSummary s =
        gleaner::run_single(other, other.name, a.output_dir, !a.no_events);
    any_stalled |= s.status != gleaner::RunStatus::Completed;
    print_summary_line(s);
    gleaner::DrainComparison cmp =
        gleaner::compare_at_drain_end(configs[0], summaries[0], s);
    std::printf("at drain end (%lld ms): %s=%" PRIu64 " %s=%" PRIu64
                " completed inferences, gap=%lld\n",
                static_cast<long long>(cmp.drain_end_ms),
                summaries[0].run_id.c_str(), cmp.completed_a,
                s.run_id.c_str(), cmp.completed_b,
                static_cast<long long>(cmp.gap));
    summaries.push_back(std::move(s));
  }

  fs::path root(a.output_dir);
  gleaner::write_summary_csv((root / "summary.csv").string(), summaries);
  gleaner::write_series_csv((root / "series.csv").string(), summaries);
  gleaner::write_histograms_csv((root / "histograms.csv").string(), summaries);
  std::printf("artifacts: %s\n", a.output_dir.c_str());
  return any_stalled ? kExitStalled : kExitOk;
}

struct SweepArgs {
  std::string mode = "pervasive";
  std::vector<std::uint32_t> batches = {1, 100, 1000, 3000, 7500};
  std::uint64_t seed = 0;
  std::string output_dir;
};

int cmd_sweep(const SweepArgs& a) {
  std::optional<gleaner::ContextMode> mode =
      gleaner::context_mode_from_name(a.mode);
  if (!mode) {
    std::fprintf(stderr, "sweep-batch: unknown mode %s\n", a.mode.c_str());
    return kExitInvalid;
  }
  gleaner::SweepResult result =
      gleaner::sweep_batch(*mode, a.batches, a.seed, a.output_dir);
  std::printf("%-8s %s\n", "batch", "makespan_s");
  for (const gleaner::SweepRow& row : result.rows)
    std::printf("%-8u %.1f\n", row.batch, row.makespan_s);
  std::printf("optimal batch: %u\n", result.optimal_batch);
  if (!a.output_dir.empty())
    std::printf("artifacts: %s\n", a.output_dir.c_str());
  return kExitOk;
}

struct TraceGenArgs {
  std::string kind = "static";
  std::string pool = "reference20";
  std::string out;
  double warmup_minutes = 15.0;
  double rate_per_minute = 1.0;
  std::uint64_t seed = 0;
  std::uint32_t min_workers = 11;
  std::uint32_t max_workers = 64;
  double dwell_minutes = 30.0;
  double duration_minutes = 360.0;
};

int cmd_trace_gen(const TraceGenArgs& a) {
  gleaner::AvailabilityTrace trace;
  if (a.kind == "static") {
    trace = gleaner::make_static_trace(named_pool(a.pool));
  } else if (a.kind == "drain") {
    trace = gleaner::make_drain_trace(named_pool(a.pool), a.warmup_minutes,
                                      a.rate_per_minute);
  } else if (a.kind == "fluctuating") {
    gleaner::GpuClass shape{gleaner::calib::kReferenceGpu, 1.0, 1, 2021};
    trace = gleaner::make_fluctuating_trace(a.seed, a.min_workers,
                                            a.max_workers, a.dwell_minutes,
                                            a.duration_minutes, shape);
  } else {
    std::fprintf(stderr, "trace gen: unknown kind %s\n", a.kind.c_str());
    return kExitInvalid;
  }
  std::string csv = gleaner::trace_to_csv(trace);
  if (a.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    spill(a.out, csv);
    std::printf("wrote %zu events to %s\n", trace.events.size(),
                a.out.c_str());
  }
  return kExitOk;
}

struct TraceReplayArgs {
  std::string file;
  std::string preset;
  std::string scenario_file;
  std::uint64_t seed = 0;
  std::string output_dir;
};

int cmd_trace_replay(const TraceReplayArgs& a) {
  gleaner::AvailabilityTrace trace = gleaner::trace_from_csv(slurp(a.file));
  std::size_t joins = 0;
  std::size_t evicts = 0;
  gleaner::EngineMs span = 0;
  for (const gleaner::TraceEvent& ev : trace.events) {
    (ev.action == gleaner::TraceAction::WorkerJoin ? joins : evicts) += 1;
    span = std::max(span, ev.time_ms);
  }
  std::printf("%s: %zu events (%zu joins, %zu evicts), initial wave %zu, "
              "span %lld ms\n",
              a.file.c_str(), trace.events.size(), joins, evicts,
              trace.initial_joins(), static_cast<long long>(span));
  if (a.preset.empty() && a.scenario_file.empty()) return kExitOk;
  if (!a.preset.empty() && !a.scenario_file.empty()) {
    std::fprintf(stderr, "trace replay: give --preset or --scenario, not both\n");
    return kExitInvalid;
  }

  gleaner::ScenarioConfig cfg =
      a.preset.empty()
          ? gleaner::scenario_from_json(slurp(a.scenario_file))
          : gleaner::resolve_preset(a.preset, a.seed);
  cfg.trace = std::move(trace);
  cfg.name += "_replay";
  std::vector<std::string> errors = gleaner::validate_scenario(cfg);
  if (!errors.empty()) {
    for (const std::string& e : errors)
      std::fprintf(stderr, "%s: %s\n", cfg.name.c_str(), e.c_str());
    return kExitInvalid;
  }
  gleaner::RunSummary s =
      gleaner::run_single(cfg, cfg.name, a.output_dir, !a.output_dir.empty());
  print_summary_line(s);
  return s.status == gleaner::RunStatus::Completed ? kExitOk : kExitStalled;
}

struct LiveArgs {
  std::uint32_t workers = 3;
  std::uint32_t tasks = 100;
  std::uint32_t batch = 10;
  std::string mode = "pervasive";
  bool kill_one = false;
  std::uint32_t transfer_cap = 3;
  std::int64_t timeout_ms = 60000;
  std::string work_dir;
  bool keep_work_dir = false;
};

int cmd_live(const LiveArgs& a) {
  std::optional<gleaner::ContextMode> mode =
      gleaner::context_mode_from_name(a.mode);
  if (!mode) {
    std::fprintf(stderr, "live-smoke: unknown mode %s\n", a.mode.c_str());
    return kExitInvalid;
  }
  gleaner::LiveSmokeOptions opt;
  opt.workers = a.workers;
  opt.tasks = a.tasks;
  opt.batch = a.batch;
  opt.mode = *mode;
  opt.kill_one = a.kill_one;
  opt.transfer_cap = a.transfer_cap;
  opt.timeout_ms = a.timeout_ms;
  opt.work_dir = a.work_dir;
  opt.keep_work_dir = a.keep_work_dir;
  gleaner::LiveSmokeReport report = gleaner::live_smoke(opt);
  std::fputs(gleaner::live_smoke_report_text(report).c_str(), stdout);
  if (report.passed) return kExitOk;
  return report.stalled ? kExitStalled : kExitFailure;
}

struct CalibrateArgs {
  std::string constants_file;
};

int cmd_calibrate(const CalibrateArgs& a) {
  std::string path = a.constants_file;
  if (path.empty()) {
    fs::path root(gleaner::default_output_root());
    fs::create_directories(root);
    path = (root / "constants.txt").string();
  }
  gleaner::CalibrationReport report = gleaner::calibrate(path);
  std::printf("t_inf_ref:        fit %.10f  frozen %.10f\n",
              report.t_inf_ref_fit, report.frozen_t_inf_ref);
  std::printf("slow speed:       fit %.6f  frozen %.6f\n",
              report.slow_speed_fit, report.frozen_slow_speed);
  std::printf("reference run:    %.1f s (target 40900)\n",
              report.pv0_makespan);
  std::printf("hosted-context B=100: %.1f s (target 2900)\n",
              report.pv4_100_makespan);
  std::printf("within tolerance: %s\n", report.within_tolerance ? "yes" : "no");
  std::printf("constants file:   %s\n", path.c_str());
  return report.within_tolerance ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Task-execution engine and opportunistic-cluster simulator with "
      "content-addressed context management"};
  app.require_subcommand(1);

  RunArgs run_args;
  run_args.output_dir = gleaner::default_output_root();
  CLI::App* run = app.add_subcommand(
      "run", "Run experiment presets or scenario files");
  run->add_option("--preset", run_args.presets,
                  "Preset name (pv0, pv1, pv2, pv3_<B>, pv4_<B>, pv5s, pv5p, "
                  "pv6); repeatable");
  run->add_option("--scenario", run_args.scenario_files,
                  "Scenario JSON file (overrides flags); repeatable");
  run->add_option("--compare", run_args.compare,
                  "Second preset; reports the completed-inference gap at the "
                  "drain end of the base run");
  run->add_option("--seed", run_args.seed, "Seed for presets");
  run->add_option("--output-dir", run_args.output_dir,
                  "Artifact directory (default: $GLEANER_OUTPUT_ROOT or ./out)");
  run->add_flag("--no-events", run_args.no_events,
                "Skip writing per-run events.bin");

  SweepArgs sweep_args;
  sweep_args.output_dir = gleaner::default_output_root();
  CLI::App* sweep = app.add_subcommand(
      "sweep-batch", "Makespan vs batch size on the 20-worker reference pool");
  sweep->add_option("--mode", sweep_args.mode,
                    "Context mode: naive, partial, pervasive");
  sweep->add_option("--batches", sweep_args.batches,
                    "Batch sizes (comma separated)")
      ->delimiter(',');
  sweep->add_option("--seed", sweep_args.seed, "Scenario seed");
  sweep->add_option("--output-dir", sweep_args.output_dir,
                    "Artifact directory for sweep.csv");

  CLI::App* trace = app.add_subcommand(
      "trace", "Generate or replay availability traces");
  trace->require_subcommand(1);

  TraceGenArgs gen_args;
  CLI::App* gen = trace->add_subcommand("gen", "Generate a trace CSV");
  gen->add_option("--kind", gen_args.kind,
                  "Trace kind: static, drain, fluctuating");
  gen->add_option("--pool", gen_args.pool,
                  "Pool for static/drain: single, reference20, cluster427");
  gen->add_option("--out", gen_args.out, "Output file (default: stdout)");
  gen->add_option("--warmup-minutes", gen_args.warmup_minutes,
                  "Drain: minutes before the first eviction");
  gen->add_option("--rate-per-minute", gen_args.rate_per_minute,
                  "Drain: evictions per minute");
  gen->add_option("--seed", gen_args.seed, "Fluctuating: RNG seed");
  gen->add_option("--min-workers", gen_args.min_workers,
                  "Fluctuating: pinned lower bound");
  gen->add_option("--max-workers", gen_args.max_workers,
                  "Fluctuating: slot upper bound");
  gen->add_option("--dwell-minutes", gen_args.dwell_minutes,
                  "Fluctuating: mean joined/absent dwell");
  gen->add_option("--duration-minutes", gen_args.duration_minutes,
                  "Fluctuating: trace length");

  TraceReplayArgs replay_args;
  replay_args.output_dir = gleaner::default_output_root();
  CLI::App* replay = trace->add_subcommand(
      "replay", "Validate a trace CSV; with a base scenario, run it");
  replay->add_option("--file", replay_args.file, "Trace CSV to replay")
      ->required();
  replay->add_option("--preset", replay_args.preset,
                     "Base preset whose trace is replaced");
  replay->add_option("--scenario", replay_args.scenario_file,
                     "Base scenario file whose trace is replaced");
  replay->add_option("--seed", replay_args.seed, "Seed for --preset");
  replay->add_option("--output-dir", replay_args.output_dir,
                     "Artifact directory");

  LiveArgs live_args;
  CLI::App* live = app.add_subcommand(
      "live-smoke",
      "Spawn a real manager and worker processes on loopback sockets");
  live->add_option("--workers", live_args.workers, "Worker process count");
  live->add_option("--tasks", live_args.tasks, "Task count");
  live->add_option("--batch", live_args.batch, "Inferences per task");
  live->add_option("--mode", live_args.mode,
                   "Context mode: partial or pervasive");
  live->add_flag("--kill-one", live_args.kill_one,
                 "SIGKILL one busy worker at half completion");
  live->add_option("--transfer-cap", live_args.transfer_cap,
                   "Concurrent outbound transfers per node");
  live->add_option("--timeout-ms", live_args.timeout_ms, "Wall-clock budget");
  live->add_option("--work-dir", live_args.work_dir,
                   "Working directory (default: a fresh temp dir)");
  live->add_flag("--keep-work-dir", live_args.keep_work_dir,
                 "Keep the working directory after a passing run");

  CalibrateArgs calibrate_args;
  CLI::App* cal = app.add_subcommand(
      "calibrate",
      "Refit workload constants and verify the frozen values reproduce the "
      "reference measurements");
  cal->add_option("--constants-file", calibrate_args.constants_file,
                  "Where to write the constants file "
                  "(default: <output root>/constants.txt)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
    if (trace->parsed()) {
      if (gen->parsed()) return cmd_trace_gen(gen_args);
      if (replay->parsed()) return cmd_trace_replay(replay_args);
    }
    if (live->parsed()) return cmd_live(live_args);
    if (cal->parsed()) return cmd_calibrate(calibrate_args);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitInvalid;
}
