#pragma once

// Scenario description: the workload cost model, the worker pool /
// availability trace, and the knobs that select a context-management mode.
// Everything the engine needs to run one experiment, serializable as a
// human-editable JSON file (schema documented in the README).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gleaner/types.hpp"

namespace gleaner {

enum class ContextMode : std::uint8_t {
  Naive = 0,     // no reuse: every task stages everything and loads the model
  Partial = 1,   // disk cache reuse; fresh model load per task
  Pervasive = 2, // disk cache + resident library; load once per worker
};

const char* context_mode_name(ContextMode mode);
std::optional<ContextMode> context_mode_from_name(const std::string& name);

// Cost model standing in for real LLM inference.  Times in seconds, sizes
// in GB; staging rates are seconds per GB with the manager as source (peer
// sources run at kPeerRateFactor of the cost, see calibration).
struct WorkloadModel {
  double t_inf_ref = 0.0;             // s per inference on the reference GPU
  double t_model_load = 0.0;          // s to move parameters disk -> GPU
  double t_software_stage = 0.0;      // s/GB, dependency package from manager
  double t_model_stage = 0.0;         // s/GB, model blob from manager
  double warm_dispatch_overhead = 0.0;// s per invocation with hosted context
  double model_size = 0.0;            // GB
  double package_size = 0.0;          // GB
  // Inference slowdown for invocations without a resident context
  // (fresh-process execution); 1.0 = no penalty.
  double cold_inference_penalty = 1.0;
};

struct GpuClass {
  std::string model_name;
  double speed_factor = 1.0;  // relative throughput; reference GPU = 1.0
  std::uint32_t count = 0;
  int release_year = 0;  // informational
};

enum class TraceAction : std::uint8_t {
  WorkerJoin = 0,
  WorkerEvict = 1,
};

struct TraceEvent {
  EngineMs time_ms = 0;
  TraceAction action = TraceAction::WorkerJoin;
  WorkerId worker_id = 0;
  std::string gpu_model;     // join only
  double speed_factor = 1.0; // join only
};

struct AvailabilityTrace {
  std::vector<TraceEvent> events;

  std::size_t initial_joins() const;  // joins at the earliest join time
  std::size_t total_joins() const;
};

// Factory policy: how many pilot workers to claim per polling cycle and the
// pool size bounds it maintains.
struct FactoryPolicy {
  std::uint32_t min_workers = 0;
  std::uint32_t max_workers = 100000;
  std::uint32_t workers_per_cycle = 100000;
  EngineMs poll_interval_ms = 5000;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t total_inferences = 0;
  std::uint32_t batch_size = 1;
  ContextMode context_mode = ContextMode::Pervasive;
  WorkloadModel workload;
  AvailabilityTrace trace;
  std::uint32_t transfer_cap = 3;  // N concurrent outbound per node
  std::uint64_t seed = 0;
  double start_threshold = 0.95;   // fraction of initial joins before dispatch
  FactoryPolicy factory;
  WorkerProfile worker_shape;      // cores/mem/disk template for all workers

  std::uint64_t num_tasks() const {
    return (total_inferences + batch_size - 1) / batch_size;
  }
};

// Returns every invariant violation; empty means the scenario is runnable.
std::vector<std::string> validate_scenario(const ScenarioConfig& config);

// JSON round-trip for scenario files.  Parsing throws std::runtime_error
// with a message naming the offending field on malformed input.
std::string scenario_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_from_json(const std::string& text);

}  // namespace gleaner
