#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "gleaner/calibration.hpp"
#include "gleaner/harness.hpp"
#include "gleaner/sim.hpp"
#include "gleaner/trace.hpp"

using namespace gleaner;

namespace {

ScenarioConfig homogeneous(std::uint32_t workers, std::uint64_t total,
                           std::uint32_t batch, ContextMode mode) {
  ScenarioConfig cfg;
  cfg.name = "homogeneous";
  cfg.total_inferences = total;
  cfg.batch_size = batch;
  cfg.context_mode = mode;
  cfg.workload = default_workload();
  cfg.trace = make_static_trace({{"A10", 1.0, workers, 2021}});
  cfg.transfer_cap = workers;  // parallel staging, the oracle's regime
  cfg.factory.poll_interval_ms = 0;
  return cfg;
}

// Random churn with a constant-size pool: every eviction is paired with a
// replacement join at the same instant, so the run always completes.
ScenarioConfig churny(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.name = "churny";
  cfg.total_inferences = 2000;
  cfg.batch_size = 10;  // 200 tasks
  cfg.context_mode = ContextMode::Pervasive;
  cfg.workload = default_workload();
  cfg.factory.poll_interval_ms = 0;

  std::mt19937_64 rng(seed);
  std::vector<WorkerId> alive;
  for (WorkerId id = 0; id < 4; ++id) {
    cfg.trace.events.push_back({0, TraceAction::WorkerJoin, id, "A10", 1.0});
    alive.push_back(id);
  }
  WorkerId next_id = 4;
  EngineMs t = 0;
  std::size_t churns = 10 + rng() % 30;
  for (std::size_t i = 0; i < churns; ++i) {
    t += 1000 + static_cast<EngineMs>(rng() % 60000);
    std::size_t victim = rng() % alive.size();
    cfg.trace.events.push_back(
        {t, TraceAction::WorkerEvict, alive[victim], "", 1.0});
    alive[victim] = next_id;
    cfg.trace.events.push_back(
        {t, TraceAction::WorkerJoin, next_id++, "A10", 1.0});
  }
  return cfg;
}

std::vector<EngineMs> stage_finish_times(const EventLog& log) {
  std::map<WorkerId, EngineMs> started;
  std::vector<EngineMs> durations;
  for (const auto& rec : log.records()) {
    if (rec.kind == EventKind::StageInStarted) started[rec.worker] = rec.time;
    if (rec.kind == EventKind::StageInFinished)
      durations.push_back(rec.time - started.at(rec.worker));
  }
  return durations;
}

}  // namespace

TEST_CASE("invalid scenarios are rejected up front") {
  ScenarioConfig cfg;  // no trace, zero inferences
  auto violations = validate_scenario(cfg);
  CHECK_FALSE(violations.empty());
  CHECK_THROWS_AS(run_scenario(cfg), std::invalid_argument);

  ScenarioConfig ok = homogeneous(1, 100, 10, ContextMode::Pervasive);
  CHECK(validate_scenario(ok).empty());

  ScenarioConfig small_disk = ok;
  small_disk.worker_shape.disk_gb = 1.0;  // cannot hold the base context
  CHECK_FALSE(validate_scenario(small_disk).empty());
}

TEST_CASE("single-worker baseline reproduces the reference makespan") {
  RunOutput out = run_scenario(resolve_preset("pv0"));
  REQUIRE(out.status == RunStatus::Completed);
  CHECK(out.summary.makespan_s == doctest::Approx(40900.1).epsilon(0.001));
  CHECK(out.summary.tasks_completed == 1500);
  CHECK(out.summary.completed_inferences == 150000);
  CHECK(out.summary.materializations == 1);
}

TEST_CASE("naive staging pays for its package size") {
  RunOutput bundled = run_scenario(resolve_preset("pv1"));
  RunOutput trimmed = run_scenario(resolve_preset("pv2"));
  REQUIRE(bundled.status == RunStatus::Completed);
  REQUIRE(trimmed.status == RunStatus::Completed);
  CHECK(bundled.summary.makespan_s == doctest::Approx(14282.5).epsilon(0.001));
  CHECK(trimmed.summary.makespan_s == doctest::Approx(7482.6).epsilon(0.001));
  CHECK(bundled.summary.makespan_s > trimmed.summary.makespan_s);
  // No reuse: every one of the 1500 tasks loads its context in-window.
  CHECK(bundled.summary.materializations == 1500);
}

TEST_CASE("twenty-worker pool with resident contexts hits the target") {
  RunOutput out = run_scenario(resolve_preset("pv4_100"));
  REQUIRE(out.status == RunStatus::Completed);
  CHECK(out.summary.makespan_s == doctest::Approx(2899.8).epsilon(0.001));
  CHECK(out.summary.materializations == 20);  // one per worker
  CHECK(out.summary.tasks_completed == 1500);
}

TEST_CASE("capped staging finishes in three distinct waves") {
  RunOutput out = run_scenario(resolve_preset("pv4_100"));
  auto durations = stage_finish_times(out.log);
  REQUIRE(durations.size() == 20);
  std::map<EngineMs, int> classes;
  for (EngineMs d : durations) ++classes[d];
  // Cap 3: the manager stages 3 directly; holders re-serve 9 more at double
  // rate; the final 8 finish one peer-wave later.
  REQUIRE(classes.size() == 3);
  CHECK(classes.at(14800) == 3);
  CHECK(classes.at(22200) == 9);
  CHECK(classes.at(29600) == 8);
}

TEST_CASE("resident-context single-inference tasks stay sub-second") {
  RunOutput out = run_scenario(resolve_preset("pv4_1"));
  REQUIRE(out.status == RunStatus::Completed);
  CHECK(out.summary.task_time.mean > 0.1);
  CHECK(out.summary.task_time.mean < 1.0);
  CHECK(out.summary.task_time.mean == doctest::Approx(0.4348).epsilon(0.01));
}

TEST_CASE("per-task context loading pushes single inferences past ten seconds") {
  RunOutput out = run_scenario(resolve_preset("pv3_1"));
  REQUIRE(out.status == RunStatus::Completed);
  CHECK(out.summary.task_time.mean > 10.0);
  CHECK(out.summary.task_time.mean < 20.0);
  // One in-window context load per task: the count tracks the task total.
  CHECK(out.summary.materializations == 150000);
}

TEST_CASE("simulated makespans match the analytic model within one percent") {
  for (ContextMode mode : {ContextMode::Partial, ContextMode::Pervasive}) {
    for (std::uint32_t workers : {1u, 2u, 4u}) {
      for (std::uint64_t tasks : {1ULL, 3ULL, 10ULL, 50ULL}) {
        ScenarioConfig cfg = homogeneous(workers, tasks * 10, 10, mode);
        double expected = closed_form_makespan(cfg);
        RunOutput out = run_scenario(cfg);
        REQUIRE(out.status == RunStatus::Completed);
        INFO("mode=", context_mode_name(mode), " W=", workers, " K=", tasks);
        CHECK(std::fabs(out.summary.makespan_s - expected) / expected < 0.01);
      }
    }
  }
}

TEST_CASE("the analytic model rejects scenarios outside its regime") {
  CHECK_THROWS_AS(
      closed_form_makespan(homogeneous(2, 100, 10, ContextMode::Naive)),
      std::invalid_argument);

  ScenarioConfig hetero = homogeneous(2, 100, 10, ContextMode::Pervasive);
  hetero.trace.events[1].speed_factor = 0.5;
  CHECK_THROWS_AS(closed_form_makespan(hetero), std::invalid_argument);

  ScenarioConfig churn = homogeneous(2, 100, 10, ContextMode::Pervasive);
  churn.trace.events.push_back({100, TraceAction::WorkerEvict, 0, "", 1.0});
  CHECK_THROWS_AS(closed_form_makespan(churn), std::invalid_argument);

  ScenarioConfig narrow = homogeneous(4, 100, 10, ContextMode::Pervasive);
  narrow.transfer_cap = 2;  // staging no longer parallel
  CHECK_THROWS_AS(closed_form_makespan(narrow), std::invalid_argument);
}

TEST_CASE("huge batches amortize everything in both modes") {
  // One task per worker at B=7500: the mode gap shrinks to the load term.
  ScenarioConfig partial = homogeneous(4, 30000, 7500, ContextMode::Partial);
  ScenarioConfig pervasive = homogeneous(4, 30000, 7500, ContextMode::Pervasive);
  double a = run_scenario(partial).summary.makespan_s;
  double b = run_scenario(pervasive).summary.makespan_s;
  CHECK(std::fabs(a - b) / b < 0.15);
}

TEST_CASE("partial mode at one task per worker tracks the slow class") {
  ScenarioConfig cfg = resolve_preset("pv3_7500");
  RunOutput out = run_scenario(cfg);
  REQUIRE(out.status == RunStatus::Completed);
  const WorkloadModel& m = cfg.workload;
  double slow_batch = m.t_model_load + m.warm_dispatch_overhead +
                      7500.0 * m.t_inf_ref * m.cold_inference_penalty /
                          calib::kSlowSpeedFactor;
  CHECK(std::fabs(out.summary.makespan_s - slow_batch) / slow_batch < 0.02);
}

TEST_CASE("identical scenarios produce byte-identical event logs") {
  ScenarioConfig cfg = resolve_preset("pv6", 3);
  RunOutput a = run_scenario(cfg);
  RunOutput b = run_scenario(cfg);
  CHECK(a.log.digest() == b.log.digest());
  CHECK(a.log.serialize() == b.log.serialize());
  CHECK(a.summary.makespan_s == b.summary.makespan_s);

  // A different trace seed is a different run.
  RunOutput c = run_scenario(resolve_preset("pv6", 4));
  CHECK_FALSE(a.log.digest() == c.log.digest());
}

TEST_CASE("a drained pool stalls with loss accounting intact") {
  ScenarioConfig cfg;
  cfg.name = "drain-out";
  cfg.total_inferences = 100000;  // far more than the pool can finish
  cfg.batch_size = 50;
  cfg.context_mode = ContextMode::Pervasive;
  cfg.workload = default_workload();
  cfg.trace = make_drain_trace({{"A10", 1.0, 4, 2021}}, 0.5, 2.0);
  cfg.factory.poll_interval_ms = 0;

  RunOutput out = run_scenario(cfg);
  CHECK(out.status == RunStatus::Stalled);
  CHECK(out.summary.status == RunStatus::Stalled);
  CHECK(out.summary.evictions == 4);
  // Every worker died mid-task: one batch lost per eviction.
  CHECK(out.summary.inferences_lost == 4 * 50);
  CHECK(out.summary.tasks_completed < cfg.num_tasks());

  bool stalled_event = false;
  for (const auto& rec : out.log.records()) {
    if (rec.kind == EventKind::RunStalled) {
      stalled_event = true;
      CHECK(rec.aux1 == cfg.num_tasks() - out.summary.tasks_completed);
    }
  }
  CHECK(stalled_event);
}

TEST_CASE("random churn never loses or duplicates a task") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ScenarioConfig cfg = churny(seed);
    RunOutput out = run_scenario(cfg);
    INFO("seed=", seed);
    REQUIRE(out.status == RunStatus::Completed);
    REQUIRE(out.results.size() == 200);

    std::set<TaskId> ids;
    for (const auto& res : out.results) {
      CHECK(res.outcome == TaskOutcome::Completed);
      CHECK(ids.insert(res.task_id).second);  // exactly once
    }
    CHECK(ids.size() == 200);
    CHECK(*ids.begin() == 0);
    CHECK(*ids.rbegin() == 199);
    CHECK(out.summary.completed_inferences == 2000);

    std::map<TaskId, int> completions;
    for (const auto& rec : out.log.records())
      if (rec.kind == EventKind::TaskCompleted) ++completions[rec.task];
    for (const auto& [task, count] : completions) CHECK(count == 1);
  }
}

TEST_CASE("presets carry the documented workloads") {
  ScenarioConfig pv0 = resolve_preset("pv0");
  CHECK(pv0.total_inferences == 150000);
  CHECK(pv0.batch_size == 100);
  CHECK(pv0.context_mode == ContextMode::Pervasive);
  CHECK(pv0.trace.initial_joins() == 1);
  CHECK(pv0.transfer_cap == 3);
  CHECK(pv0.start_threshold == 0.95);

  CHECK(resolve_preset("pv1").workload.package_size == 10.5);
  CHECK(resolve_preset("pv2").workload.package_size == 3.7);
  CHECK(resolve_preset("pv1").context_mode == ContextMode::Naive);

  ScenarioConfig pv3 = resolve_preset("pv3_1000");
  CHECK(pv3.context_mode == ContextMode::Partial);
  CHECK(pv3.batch_size == 1000);
  CHECK(pv3.trace.initial_joins() == 20);

  ScenarioConfig pv5 = resolve_preset("pv5s");
  std::size_t evicts = 0;
  for (const auto& ev : pv5.trace.events)
    if (ev.action == TraceAction::WorkerEvict) ++evicts;
  CHECK(evicts == 20);
  CHECK(pv5.context_mode == ContextMode::Pervasive);
  CHECK(resolve_preset("pv5p").batch_size == 1000);
  CHECK(resolve_preset("pv5p").context_mode == ContextMode::Partial);

  CHECK_THROWS_AS(resolve_preset("pv9"), std::invalid_argument);
}
