// Release gate: one check per headline result the engine must reproduce,
// printed as a pass/fail line with the measured value and its pinned
// tolerance.  Exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "gleaner/calibration.hpp"
#include "gleaner/harness.hpp"
#include "gleaner/live.hpp"
#include "gleaner/scheduler.hpp"
#include "gleaner/sim.hpp"
#include "gleaner/trace.hpp"

using namespace gleaner;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<Criterion> g_results;

void record(const std::string& name, bool passed, const std::string& detail) {
  g_results.push_back({name, passed, detail});
  std::printf("[%2zu] %s  %-38s %s\n", g_results.size(),
              passed ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

double preset_makespan(const std::string& name) {
  return run_scenario(resolve_preset(name)).summary.makespan_s;
}

// --- 1: single reference worker, batch 100 -> 40.9k seconds --------------
void check_baseline() {
  double makespan = preset_makespan("pv0");
  bool ok = std::fabs(makespan - 40900.0) / 40900.0 <= 0.02;
  record("baseline-makespan", ok,
         fmt("makespan=%.1fs target=40900s +/-2%%", makespan));
}

// --- 2: 20-worker pool with resident contexts: 2.9k s, 12-15x speedup ----
void check_cluster_speedup() {
  double base = preset_makespan("pv0");
  double pooled = preset_makespan("pv4_100");
  double speedup = base / pooled;
  bool ok = pooled <= 3200.0 && speedup >= 12.0 && speedup <= 15.0;
  record("cluster-speedup", ok,
         fmt("makespan=%.1fs (<=3200) speedup=%.2fx (in [12,15])", pooled,
             speedup));
}

// --- 3: cached-context batch sweep is a strict parabola with dip at 1e3 --
void check_batch_parabola() {
  SweepResult sweep =
      sweep_batch(ContextMode::Partial, {1, 100, 1000, 3000, 7500}, 0, "");
  const auto& r = sweep.rows;
  bool shape = r.size() == 5 && r[0].makespan_s > r[1].makespan_s &&
               r[1].makespan_s > r[2].makespan_s &&
               r[2].makespan_s < r[3].makespan_s &&
               r[3].makespan_s < r[4].makespan_s;
  bool ok = shape && sweep.optimal_batch == 1000;
  std::string shape_s;
  for (const auto& row : r) shape_s += fmt(" %.0f", row.makespan_s);
  record("batch-parabola", ok,
         fmt("makespans(B=1,100,1e3,3e3,7.5e3):%s optimal=%u", shape_s.c_str(),
             sweep.optimal_batch));
}

// --- 4: resident contexts flatten the batch curve to <= 1.20x ------------
void check_batch_insensitivity() {
  SweepResult sweep = sweep_batch(ContextMode::Pervasive, {1, 100, 1000}, 0, "");
  double lo = sweep.rows[0].makespan_s, hi = lo;
  for (const auto& row : sweep.rows) {
    lo = std::min(lo, row.makespan_s);
    hi = std::max(hi, row.makespan_s);
  }
  double ratio = hi / lo;
  bool ok = sweep.rows.size() == 3 && ratio <= 1.20;
  record("batch-insensitivity", ok,
         fmt("max/min makespan=%.3f (<=1.20) across B={1,100,1000}", ratio));
}

// --- 5: batch-1 task times: sub-second warm, 10-20 s with in-window load -
void check_task_time_envelopes() {
  double warm = run_scenario(resolve_preset("pv4_1")).summary.task_time.mean;
  double cold = run_scenario(resolve_preset("pv3_1")).summary.task_time.mean;
  bool ok = warm >= 0.1 && warm <= 1.0 && cold >= 10.0 && cold <= 20.0;
  record("task-time-envelopes", ok,
         fmt("warm mean=%.4fs (in [0.1,1]) cold mean=%.2fs (in [10,20])", warm,
             cold));
}

// --- 6: drain scenario: throughput gap at drain end, exact loss counts ---
void check_drain_gap() {
  ScenarioConfig pv5s = resolve_preset("pv5s");
  RunSummary a = run_single(pv5s, "pv5s", "", false);
  RunSummary b = run_single(resolve_preset("pv5p"), "pv5p", "", false);
  DrainComparison cmp = compare_at_drain_end(pv5s, a, b);
  bool ok = cmp.gap >= 13000 && cmp.gap <= 21000 &&
            a.inferences_lost == 20 * 100 && b.inferences_lost == 20 * 1000 &&
            a.evictions == 20 && b.evictions == 20;
  record("drain-throughput-gap", ok,
         fmt("gap=%lld (in [13k,21k]) lost=%llu/%llu (=2k/20k)",
             static_cast<long long>(cmp.gap),
             static_cast<unsigned long long>(a.inferences_lost),
             static_cast<unsigned long long>(b.inferences_lost)));
}

// --- 7: 1000 random eviction traces: exactly-once, conserved, < 60 s -----

// Replays an event log through a per-task state machine, checking that every
// transition is legal and every submitted task ends Completed exactly once.
bool replay_conserves(const std::vector<EventRecord>& log, std::string& err) {
  enum class S { Ready, Running, Done };
  std::map<TaskId, S> tasks;
  std::uint64_t submitted = 0, completed = 0;
  for (const auto& ev : log) {
    switch (ev.kind) {
      case EventKind::TaskSubmitted:
        if (tasks.count(ev.task)) { err = "resubmitted task"; return false; }
        tasks[ev.task] = S::Ready;
        ++submitted;
        break;
      case EventKind::TaskDispatched:
        if (tasks[ev.task] != S::Ready) { err = "dispatch of non-ready task"; return false; }
        tasks[ev.task] = S::Running;
        break;
      case EventKind::TaskRequeued:
        if (tasks[ev.task] != S::Running) { err = "requeue of non-running task"; return false; }
        tasks[ev.task] = S::Ready;
        break;
      case EventKind::TaskCompleted:
        if (tasks[ev.task] != S::Running) { err = "completion of non-running task"; return false; }
        tasks[ev.task] = S::Done;
        ++completed;
        break;
      default:
        break;
    }
    if (completed > submitted) { err = "completed > submitted"; return false; }
  }
  for (const auto& [task, state] : tasks) {
    if (state != S::Done) { err = "task left unfinished"; return false; }
  }
  err.clear();
  return completed == submitted;
}

ScenarioConfig random_churn_scenario(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.name = "churn";
  cfg.total_inferences = 2000;
  cfg.batch_size = 10;  // 200 tasks
  cfg.context_mode = ContextMode::Pervasive;
  cfg.workload = default_workload();
  cfg.factory.poll_interval_ms = 0;

  std::mt19937_64 rng(seed);
  std::vector<WorkerId> alive;
  std::uint32_t initial = 2 + rng() % 6;
  for (WorkerId id = 0; id < initial; ++id) {
    cfg.trace.events.push_back({0, TraceAction::WorkerJoin, id, "A10", 1.0});
    alive.push_back(id);
  }
  WorkerId next_id = initial;
  EngineMs t = 0;
  std::size_t churns = rng() % 40;
  for (std::size_t i = 0; i < churns; ++i) {
    t += 500 + static_cast<EngineMs>(rng() % 90000);
    std::size_t victim = rng() % alive.size();
    cfg.trace.events.push_back(
        {t, TraceAction::WorkerEvict, alive[victim], "", 1.0});
    alive[victim] = next_id;
    cfg.trace.events.push_back(
        {t, TraceAction::WorkerJoin, next_id++, "A10", 1.0});
  }
  return cfg;
}

void check_eviction_tolerance() {
  auto begin = std::chrono::steady_clock::now();
  std::string err;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    RunOutput out = run_scenario(random_churn_scenario(seed));
    if (out.status != RunStatus::Completed) {
      record("eviction-exactly-once", false,
             fmt("seed %llu stalled with workers still available",
                 static_cast<unsigned long long>(seed)));
      return;
    }
    if (out.results.size() != 200) {
      record("eviction-exactly-once", false,
             fmt("seed %llu finished %zu/200 tasks",
                 static_cast<unsigned long long>(seed), out.results.size()));
      return;
    }
    std::set<TaskId> ids;
    for (const auto& res : out.results) ids.insert(res.task_id);
    if (ids.size() != 200) {
      record("eviction-exactly-once", false,
             fmt("seed %llu produced duplicate results",
                 static_cast<unsigned long long>(seed)));
      return;
    }
    if (!replay_conserves(out.log.records(), err)) {
      record("eviction-exactly-once", false,
             fmt("seed %llu broke conservation: %s",
                 static_cast<unsigned long long>(seed), err.c_str()));
      return;
    }
  }
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - begin)
                     .count();
  bool ok = elapsed < 60000;
  record("eviction-exactly-once", ok,
         fmt("1000 traces x 200 tasks conserved in %lldms (<60s)",
             static_cast<long long>(elapsed)));
}

// --- 8: distribution planner finishes in provably minimal rounds ---------
std::uint32_t oracle_rounds(std::uint32_t targets, std::uint32_t cap) {
  std::uint64_t sources = 1, remaining = targets;
  std::uint32_t rounds = 0;
  while (remaining > 0) {
    std::uint64_t served = std::min(sources * cap, remaining);
    remaining -= served;
    sources += served;
    ++rounds;
  }
  return rounds;
}

void check_planner_rounds() {
  for (std::uint32_t cap = 1; cap <= 4; ++cap) {
    for (std::uint32_t w = 1; w <= 64; ++w) {
      std::vector<WorkerId> targets;
      for (WorkerId id = 0; id < w; ++id) targets.push_back(id);
      auto plan = plan_context_distribution({}, targets, cap);
      std::uint32_t got = plan_round_count(plan);
      std::uint32_t want = oracle_rounds(w, cap);
      if (got != want || plan.size() != w) {
        record("planner-minimal-rounds", false,
               fmt("W=%u cap=%u: %u rounds, oracle says %u", w, cap, got,
                   want));
        return;
      }
    }
  }
  record("planner-minimal-rounds", true,
         "all W<=64, cap in {1..4} match the growth oracle");
}

// --- 9: simulator matches the analytic makespan within 1% ----------------
void check_closed_form() {
  double worst = 0.0;
  for (ContextMode mode : {ContextMode::Partial, ContextMode::Pervasive}) {
    for (std::uint32_t workers = 1; workers <= 4; ++workers) {
      for (std::uint64_t tasks : {1ULL, 2ULL, 5ULL, 13ULL, 50ULL}) {
        ScenarioConfig cfg;
        cfg.name = "oracle";
        cfg.total_inferences = tasks * 10;
        cfg.batch_size = 10;
        cfg.context_mode = mode;
        cfg.workload = default_workload();
        cfg.trace = make_static_trace({{"A10", 1.0, workers, 2021}});
        cfg.transfer_cap = workers;
        cfg.factory.poll_interval_ms = 0;
        double expected = closed_form_makespan(cfg);
        double got = run_scenario(cfg).summary.makespan_s;
        double rel = std::fabs(got - expected) / expected;
        worst = std::max(worst, rel);
        if (rel >= 0.01) {
          record("analytic-oracle", false,
                 fmt("W=%u K=%llu %s: sim %.2f vs oracle %.2f (%.3f%%)",
                     workers, static_cast<unsigned long long>(tasks),
                     context_mode_name(mode), got, expected, rel * 100));
          return;
        }
      }
    }
  }
  record("analytic-oracle", true,
         fmt("40 homogeneous scenarios within 1%% (worst %.4f%%)",
             worst * 100));
}

// --- 10: the full ladder is byte-deterministic ---------------------------
std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void check_determinism() {
  fs::path root = fs::temp_directory_path() /
                  ("gleaner-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  ExperimentPlan plan;
  plan.presets = preset_ladder();
  plan.seed = 0;
  plan.write_events = true;

  plan.output_dir = (root / "a").string();
  run_plan(plan);
  plan.output_dir = (root / "b").string();
  run_plan(plan);

  bool ok = true;
  std::string detail = "summary.csv and every events.bin byte-identical";
  if (file_bytes(root / "a" / "summary.csv") !=
      file_bytes(root / "b" / "summary.csv")) {
    ok = false;
    detail = "summary.csv differs between identical runs";
  }
  for (const std::string& name : plan.presets) {
    std::string a = file_bytes(root / "a" / name / "events.bin");
    if (a.empty() || a != file_bytes(root / "b" / name / "events.bin")) {
      ok = false;
      detail = "events.bin differs for " + name;
      break;
    }
  }
  fs::remove_all(root);
  record("run-determinism", ok, detail);
}

// --- 11: the live protocol survives a worker hard-kill -------------------
void check_live_smoke() {
  auto begin = std::chrono::steady_clock::now();
  LiveSmokeOptions opt;
  opt.workers = 3;
  opt.tasks = 100;
  opt.batch = 10;
  opt.mode = ContextMode::Pervasive;
  opt.timeout_ms = 25000;

  LiveSmokeReport plain = live_smoke(opt);
  opt.kill_one = true;
  LiveSmokeReport killed = live_smoke(opt);

  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - begin)
                     .count();
  bool ok = plain.passed && plain.materializations_total == 3 &&
            killed.passed && killed.killed_worker >= 0 && elapsed < 60000;
  std::string detail =
      fmt("plain: %u tasks, %llu contexts; kill: %u tasks, %u requeues; %lldms",
          plain.tasks_completed,
          static_cast<unsigned long long>(plain.materializations_total),
          killed.tasks_completed, killed.requeues,
          static_cast<long long>(elapsed));
  if (!plain.passed) detail += " [plain: " + plain.failure + "]";
  if (!killed.passed) detail += " [kill: " + killed.failure + "]";
  record("live-smoke-kill", ok, detail);
}

}  // namespace

int main() {
  std::printf("acceptance: engine and experiment reproduction criteria\n");
  check_baseline();
  check_cluster_speedup();
  check_batch_parabola();
  check_batch_insensitivity();
  check_task_time_envelopes();
  check_drain_gap();
  check_eviction_tolerance();
  check_planner_rounds();
  check_closed_form();
  check_determinism();
  check_live_smoke();

  std::size_t passed = 0;
  for (const Criterion& c : g_results)
    if (c.passed) ++passed;
  std::printf("acceptance: %zu/%zu criteria passed\n", passed,
              g_results.size());
  if (passed != g_results.size()) {
    for (const Criterion& c : g_results)
      if (!c.passed) std::printf("  FAILED: %s (%s)\n", c.name.c_str(),
                                 c.detail.c_str());
    return 1;
  }
  return 0;
}
