#include "gleaner/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <stdexcept>

namespace gleaner {

using nlohmann::json;

const char* context_mode_name(ContextMode mode) {
  switch (mode) {
    case ContextMode::Naive: return "naive";
    case ContextMode::Partial: return "partial";
    case ContextMode::Pervasive: return "pervasive";
  }
  return "unknown";
}

std::optional<ContextMode> context_mode_from_name(const std::string& name) {
  if (name == "naive" || name == "Naive") return ContextMode::Naive;
  if (name == "partial" || name == "Partial") return ContextMode::Partial;
  if (name == "pervasive" || name == "Pervasive") return ContextMode::Pervasive;
  return std::nullopt;
}

std::size_t AvailabilityTrace::initial_joins() const {
  std::optional<EngineMs> first;
  std::size_t n = 0;
  for (const auto& ev : events) {
    if (ev.action != TraceAction::WorkerJoin) continue;
    if (!first) first = ev.time_ms;
    if (ev.time_ms == *first) ++n;
  }
  return n;
}

std::size_t AvailabilityTrace::total_joins() const {
  std::size_t n = 0;
  for (const auto& ev : events) {
    if (ev.action == TraceAction::WorkerJoin) ++n;
  }
  return n;
}

std::vector<std::string> validate_scenario(const ScenarioConfig& config) {
  std::vector<std::string> violations;
  auto bad = [&](const std::string& msg) { violations.push_back(msg); };

  if (config.batch_size < 1) bad("batch_size >= 1");
  if (config.total_inferences < 1) bad("total_inferences >= 1");
  if (!(config.start_threshold > 0.0 && config.start_threshold <= 1.0)) {
    bad("0 < start_threshold <= 1");
  }
  if (config.transfer_cap < 1) bad("transfer_cap >= 1");

  const WorkloadModel& w = config.workload;
  for (auto [value, field] : {std::pair<double, const char*>{w.t_inf_ref, "t_inf_ref"},
                              {w.t_model_load, "t_model_load"},
                              {w.t_software_stage, "t_software_stage"},
                              {w.t_model_stage, "t_model_stage"},
                              {w.warm_dispatch_overhead, "warm_dispatch_overhead"},
                              {w.model_size, "model_size"},
                              {w.package_size, "package_size"}}) {
    if (value < 0.0) bad(std::string(field) + " >= 0");
  }
  if (w.cold_inference_penalty < 1.0) bad("cold_inference_penalty >= 1");

  EngineMs prev = 0;
  bool first = true;
  for (const auto& ev : config.trace.events) {
    if (!first && ev.time_ms < prev) {
      bad("event times non-decreasing");
      break;
    }
    prev = ev.time_ms;
    first = false;
  }
  for (const auto& ev : config.trace.events) {
    if (ev.action == TraceAction::WorkerJoin && ev.speed_factor <= 0.0) {
      bad("speed_factor > 0");
      break;
    }
  }
  if (config.trace.total_joins() == 0) bad("trace contains at least one join");
  if (config.worker_shape.disk_gb <= 0.0) bad("worker disk_gb > 0");
  // A pool whose disks cannot hold the base context would loop forever on
  // stage-in failures; reject it up front.
  if (config.worker_shape.disk_gb < w.package_size + w.model_size)
    bad("worker disk_gb >= package_size + model_size");
  return violations;
}

namespace {

json workload_to_json(const WorkloadModel& w) {
  return json{{"t_inf_ref", w.t_inf_ref},
              {"t_model_load", w.t_model_load},
              {"t_software_stage", w.t_software_stage},
              {"t_model_stage", w.t_model_stage},
              {"warm_dispatch_overhead", w.warm_dispatch_overhead},
              {"model_size", w.model_size},
              {"package_size", w.package_size},
              {"cold_inference_penalty", w.cold_inference_penalty}};
}

WorkloadModel workload_from_json(const json& j) {
  WorkloadModel w;
  w.t_inf_ref = j.at("t_inf_ref").get<double>();
  w.t_model_load = j.at("t_model_load").get<double>();
  w.t_software_stage = j.at("t_software_stage").get<double>();
  w.t_model_stage = j.at("t_model_stage").get<double>();
  w.warm_dispatch_overhead = j.at("warm_dispatch_overhead").get<double>();
  w.model_size = j.at("model_size").get<double>();
  w.package_size = j.at("package_size").get<double>();
  w.cold_inference_penalty = j.value("cold_inference_penalty", 1.0);
  return w;
}

}  // namespace

std::string scenario_to_json(const ScenarioConfig& c) {
  json trace = json::array();
  for (const auto& ev : c.trace.events) {
    json row{{"time_ms", ev.time_ms},
             {"action", ev.action == TraceAction::WorkerJoin ? "join" : "evict"},
             {"worker_id", ev.worker_id}};
    if (ev.action == TraceAction::WorkerJoin) {
      row["gpu_model"] = ev.gpu_model;
      row["speed_factor"] = ev.speed_factor;
    }
    trace.push_back(std::move(row));
  }
  json j{{"name", c.name},
         {"total_inferences", c.total_inferences},
         {"batch_size", c.batch_size},
         {"context_mode", context_mode_name(c.context_mode)},
         {"workload", workload_to_json(c.workload)},
         {"trace", std::move(trace)},
         {"transfer_cap", c.transfer_cap},
         {"seed", c.seed},
         {"start_threshold", c.start_threshold},
         {"factory",
          {{"min_workers", c.factory.min_workers},
           {"max_workers", c.factory.max_workers},
           {"workers_per_cycle", c.factory.workers_per_cycle},
           {"poll_interval_ms", c.factory.poll_interval_ms}}},
         {"worker_shape",
          {{"cores", c.worker_shape.cores},
           {"mem_gb", c.worker_shape.mem_gb},
           {"disk_gb", c.worker_shape.disk_gb},
           {"gpus", c.worker_shape.gpus}}}};
  return j.dump(2) + "\n";
}

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scenario parse error: ") + e.what());
  }
  try {
    ScenarioConfig c;
    c.name = j.value("name", "scenario");
    c.total_inferences = j.at("total_inferences").get<std::uint64_t>();
    c.batch_size = j.at("batch_size").get<std::uint32_t>();
    auto mode = context_mode_from_name(j.at("context_mode").get<std::string>());
    if (!mode) throw std::runtime_error("unknown context_mode");
    c.context_mode = *mode;
    c.workload = workload_from_json(j.at("workload"));
    for (const auto& row : j.at("trace")) {
      TraceEvent ev;
      ev.time_ms = row.at("time_ms").get<EngineMs>();
      std::string action = row.at("action").get<std::string>();
      if (action == "join") {
        ev.action = TraceAction::WorkerJoin;
        ev.gpu_model = row.at("gpu_model").get<std::string>();
        ev.speed_factor = row.at("speed_factor").get<double>();
      } else if (action == "evict") {
        ev.action = TraceAction::WorkerEvict;
      } else {
        throw std::runtime_error("unknown trace action: " + action);
      }
      ev.worker_id = row.at("worker_id").get<WorkerId>();
      c.trace.events.push_back(std::move(ev));
    }
    c.transfer_cap = j.value("transfer_cap", 3u);
    c.seed = j.value("seed", std::uint64_t{0});
    c.start_threshold = j.value("start_threshold", 0.95);
    if (j.contains("factory")) {
      const auto& f = j.at("factory");
      c.factory.min_workers = f.value("min_workers", 0u);
      c.factory.max_workers = f.value("max_workers", 100000u);
      c.factory.workers_per_cycle = f.value("workers_per_cycle", 100000u);
      c.factory.poll_interval_ms = f.value("poll_interval_ms", EngineMs{5000});
    }
    if (j.contains("worker_shape")) {
      const auto& s = j.at("worker_shape");
      c.worker_shape.cores = s.value("cores", 2u);
      c.worker_shape.mem_gb = s.value("mem_gb", 10.0);
      c.worker_shape.disk_gb = s.value("disk_gb", 70.0);
      c.worker_shape.gpus = s.value("gpus", 1u);
    }
    return c;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scenario field error: ") + e.what());
  }
}

}  // namespace gleaner
