#include "gleaner/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "gleaner/calibration.hpp"
#include "gleaner/trace.hpp"

namespace gleaner {
namespace {

namespace fs = std::filesystem;

constexpr double kDrainWarmupMinutes = 15.0;
constexpr double kDrainRatePerMinute = 1.0;
constexpr std::uint32_t kFluctuatingMin = 11;
constexpr std::uint32_t kFluctuatingMax = 64;
constexpr double kFluctuatingDwellMinutes = 30.0;
constexpr double kFluctuatingDurationMinutes = 360.0;

// Histogram defaults: task times in 1 s buckets trimmed at 60 s; per-
// inference times in 0.1 s buckets trimmed at 5 s.
constexpr double kTaskBucket = 1.0;
constexpr double kTaskTrim = 60.0;
constexpr double kInfBucket = 0.1;
constexpr double kInfTrim = 5.0;

ScenarioConfig base_scenario(const std::string& name, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.name = name;
  cfg.total_inferences = 150000;
  cfg.batch_size = 100;
  cfg.context_mode = ContextMode::Pervasive;
  cfg.workload = default_workload();
  cfg.transfer_cap = calib::kDefaultTransferCap;
  cfg.seed = seed;
  cfg.start_threshold = calib::kDefaultStartThreshold;
  cfg.factory.poll_interval_ms = 0;  // trace-driven presets
  return cfg;
}

std::uint32_t parse_batch_suffix(const std::string& name, std::size_t prefix) {
  if (name.size() <= prefix) throw std::invalid_argument("missing batch size");
  char* end = nullptr;
  unsigned long v = std::strtoul(name.c_str() + prefix, &end, 10);
  if (end == nullptr || *end != '\0' || v < 1)
    throw std::invalid_argument("bad batch size in preset name: " + name);
  return static_cast<std::uint32_t>(v);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace

ScenarioConfig resolve_preset(const std::string& name, std::uint64_t seed) {
  ScenarioConfig cfg = base_scenario(name, seed);
  if (name == "pv0") {
    PoolSpec pool = {{calib::kReferenceGpu, 1.0, 1, 2021}};
    cfg.trace = make_static_trace(pool);
    return cfg;
  }
  if (name == "pv1" || name == "pv2") {
    cfg.context_mode = ContextMode::Naive;
    if (name == "pv1") cfg.workload.package_size = calib::kUnoptimizedPackageGb;
    cfg.trace = make_static_trace(reference_pool_20());
    return cfg;
  }
  if (name.rfind("pv3_", 0) == 0 || name.rfind("pv4_", 0) == 0) {
    cfg.context_mode =
        name[2] == '3' ? ContextMode::Partial : ContextMode::Pervasive;
    cfg.batch_size = parse_batch_suffix(name, 4);
    cfg.trace = make_static_trace(reference_pool_20());
    return cfg;
  }
  if (name == "pv5s" || name == "pv5p") {
    if (name == "pv5p") {
      cfg.context_mode = ContextMode::Partial;
      cfg.batch_size = 1000;
    }
    cfg.trace = make_drain_trace(reference_pool_20(), kDrainWarmupMinutes,
                                 kDrainRatePerMinute);
    return cfg;
  }
  if (name == "pv6") {
    GpuClass shape{calib::kReferenceGpu, 1.0, 1, 2021};
    cfg.trace = make_fluctuating_trace(seed, kFluctuatingMin, kFluctuatingMax,
                                       kFluctuatingDwellMinutes,
                                       kFluctuatingDurationMinutes, shape);
    return cfg;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<std::string> preset_ladder() {
  return {"pv0",    "pv1",     "pv2",     "pv3_1",  "pv3_100",
          "pv3_1000", "pv3_3000", "pv3_7500", "pv4_1",  "pv4_100",
          "pv4_1000", "pv5s",    "pv5p",    "pv6"};
}

std::string summary_csv_header() {
  return "run_id,status,makespan_s,tasks_completed,completed_inferences,"
         "task_time_mean_s,task_time_std_s,task_time_min_s,task_time_max_s,"
         "task_time_incl_wait_mean_s,evictions,inferences_lost,"
         "materializations,avg_connected_workers\n";
}

std::string summary_csv_row(const RunSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%s,%s,%.3f,%llu,%llu,%.6f,%.6f,%.6f,%.6f,%.6f,%llu,%llu,%llu,"
                "%.3f\n",
                s.run_id.c_str(), run_status_name(s.status), s.makespan_s,
                static_cast<unsigned long long>(s.tasks_completed),
                static_cast<unsigned long long>(s.completed_inferences),
                s.task_time.mean, s.task_time.std_dev, s.task_time.min,
                s.task_time.max, s.task_time_incl_wait.mean,
                static_cast<unsigned long long>(s.evictions),
                static_cast<unsigned long long>(s.inferences_lost),
                static_cast<unsigned long long>(s.materializations),
                s.avg_connected_workers);
  return buf;
}

void write_summary_csv(const std::string& path,
                       const std::vector<RunSummary>& summaries) {
  std::string text = summary_csv_header();
  for (const RunSummary& s : summaries) text += summary_csv_row(s);
  write_text(path, text);
}

void write_series_csv(const std::string& path,
                      const std::vector<RunSummary>& summaries) {
  std::string text = "run_id,time_ms,metric,value\n";
  char line[256];
  for (const RunSummary& s : summaries) {
    for (const auto& [t, v] : s.connected_workers_series) {
      std::snprintf(line, sizeof line, "%s,%lld,connected_workers,%u\n",
                    s.run_id.c_str(), static_cast<long long>(t), v);
      text += line;
    }
    for (const auto& [t, v] : s.completed_inferences_series) {
      std::snprintf(line, sizeof line, "%s,%lld,completed_inferences,%llu\n",
                    s.run_id.c_str(), static_cast<long long>(t),
                    static_cast<unsigned long long>(v));
      text += line;
    }
  }
  write_text(path, text);
}

void write_histograms_csv(const std::string& path,
                          const std::vector<RunSummary>& summaries) {
  std::string text = "run_id,kind,bucket_lo_s,count\n";
  char line[256];
  auto emit = [&](const std::string& run, const char* kind,
                  const Histogram& h, double trim) {
    for (const auto& [lo, count] : h.buckets) {
      std::snprintf(line, sizeof line, "%s,%s,%.3f,%llu\n", run.c_str(), kind,
                    lo, static_cast<unsigned long long>(count));
      text += line;
    }
    if (h.trimmed > 0) {
      std::snprintf(line, sizeof line, "%s,%s_trimmed,%.3f,%llu\n",
                    run.c_str(), kind, trim,
                    static_cast<unsigned long long>(h.trimmed));
      text += line;
    }
  };
  for (const RunSummary& s : summaries) {
    emit(s.run_id, "per_task",
         histogram(s.task_times_s, kTaskBucket, kTaskTrim), kTaskTrim);
    std::vector<double> per_inf;
    per_inf.reserve(s.task_times_s.size());
    for (std::size_t i = 0; i < s.task_times_s.size(); ++i) {
      double b = i < s.task_batches.size() && s.task_batches[i] > 0
                     ? static_cast<double>(s.task_batches[i])
                     : 1.0;
      per_inf.push_back(s.task_times_s[i] / b);
    }
    emit(s.run_id, "per_inference", histogram(per_inf, kInfBucket, kInfTrim),
         kInfTrim);
  }
  write_text(path, text);
}

RunSummary run_single(const ScenarioConfig& config, const std::string& run_id,
                      const std::string& output_dir, bool write_events) {
  RunOutput out = run_scenario(config);
  out.summary.run_id = run_id;
  if (!output_dir.empty()) {
    fs::create_directories(fs::path(output_dir) / run_id);
    if (write_events) {
      auto bytes = out.log.serialize();
      std::ofstream f(fs::path(output_dir) / run_id / "events.bin",
                      std::ios::binary);
      if (!f) throw std::runtime_error("cannot write events.bin for " + run_id);
      f.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    }
  }
  return out.summary;
}

PlanResult run_plan(const ExperimentPlan& plan) {
  PlanResult result;
  if (!plan.output_dir.empty()) fs::create_directories(plan.output_dir);
  for (const std::string& name : plan.presets) {
    ScenarioConfig cfg = resolve_preset(name, plan.seed);
    RunSummary s = run_single(cfg, name, plan.output_dir, plan.write_events);
    result.any_stalled |= s.status != RunStatus::Completed;
    result.summaries.push_back(std::move(s));
  }
  if (!plan.output_dir.empty()) {
    fs::path root(plan.output_dir);
    write_summary_csv((root / "summary.csv").string(), result.summaries);
    write_series_csv((root / "series.csv").string(), result.summaries);
    write_histograms_csv((root / "histograms.csv").string(), result.summaries);
  }
  return result;
}

SweepResult sweep_batch(ContextMode mode,
                        const std::vector<std::uint32_t>& batches,
                        std::uint64_t seed, const std::string& output_dir) {
  SweepResult result;
  result.mode = mode;
  std::vector<RunSummary> summaries;
  for (std::uint32_t batch : batches) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_B%u", context_mode_name(mode), batch);
    ScenarioConfig cfg = base_scenario(name, seed);
    cfg.context_mode = mode;
    cfg.batch_size = batch;
    cfg.trace = make_static_trace(reference_pool_20());
    RunSummary s = run_single(cfg, name, output_dir, false);
    SweepRow row;
    row.batch = batch;
    row.makespan_s = s.makespan_s;
    result.rows.push_back(row);
    summaries.push_back(std::move(s));
  }
  std::uint32_t best = 0;
  double best_t = 0.0;
  for (const SweepRow& row : result.rows) {
    if (best == 0 || row.makespan_s < best_t) {
      best = row.batch;
      best_t = row.makespan_s;
    }
  }
  result.optimal_batch = best;
  if (!output_dir.empty()) {
    std::string text = "batch,makespan_s\n";
    char line[64];
    for (const SweepRow& row : result.rows) {
      std::snprintf(line, sizeof line, "%u,%.3f\n", row.batch, row.makespan_s);
      text += line;
    }
    fs::create_directories(output_dir);
    write_text((fs::path(output_dir) / "sweep.csv").string(), text);
    write_summary_csv((fs::path(output_dir) / "summary.csv").string(),
                      summaries);
  }
  return result;
}

DrainComparison compare_at_drain_end(const ScenarioConfig& scenario_a,
                                     const RunSummary& a,
                                     const RunSummary& b) {
  DrainComparison cmp;
  for (const TraceEvent& ev : scenario_a.trace.events)
    if (ev.action == TraceAction::WorkerEvict)
      cmp.drain_end_ms = std::max(cmp.drain_end_ms, ev.time_ms);
  cmp.completed_a = completed_inferences_at(a, cmp.drain_end_ms);
  cmp.completed_b = completed_inferences_at(b, cmp.drain_end_ms);
  cmp.gap = static_cast<std::int64_t>(cmp.completed_a) -
            static_cast<std::int64_t>(cmp.completed_b);
  return cmp;
}

CalibrationReport calibrate(const std::string& constants_path) {
  CalibrationReport report;
  report.frozen_t_inf_ref = calib::kTInfRef;
  report.frozen_slow_speed = calib::kSlowSpeedFactor;

  // t_inf_ref from the warm-pipeline identity of the reference run.
  const WorkloadModel m = default_workload();
  double stage = m.package_size * m.t_software_stage +
                 m.model_size * m.t_model_stage;
  // Reference run critical path: 1500 sequential invocations on one worker.
  double invocations = std::ceil(150000.0 / 100.0);
  report.t_inf_ref_fit =
      (calib::kReferenceMakespan - stage - m.t_model_load -
       invocations * m.warm_dispatch_overhead) /
      150000.0;

  // Slow-class speed from the two-class pool makespan target.
  auto pool_makespan = [&](double slow_speed) {
    ScenarioConfig cfg = base_scenario("calibration", 0);
    PoolSpec pool = {{calib::kReferenceGpu, 1.0, 10, 2021},
                     {calib::kSlowGpu, slow_speed, 10, 2016}};
    cfg.trace = make_static_trace(pool);
    return run_scenario(cfg).summary.makespan_s;
  };
  report.slow_speed_fit =
      bisect_decreasing(pool_makespan, 2900.0, 0.2, 1.0, 40);

  report.pv0_makespan = run_scenario(resolve_preset("pv0")).summary.makespan_s;
  report.pv4_100_makespan = pool_makespan(calib::kSlowSpeedFactor);
  report.within_tolerance =
      std::fabs(report.pv0_makespan - 40900.0) / 40900.0 <= 0.02 &&
      std::fabs(report.pv4_100_makespan - 2900.0) / 2900.0 <= 0.02;

  if (!constants_path.empty()) write_text(constants_path, constants_file_text());
  return report;
}

std::string default_output_root() {
  if (const char* env = std::getenv("GLEANER_OUTPUT_ROOT"))
    if (*env != '\0') return env;
  return "out";
}

}  // namespace gleaner
