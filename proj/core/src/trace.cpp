#include "gleaner/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gleaner {
namespace {

EngineMs minutes_to_ms(double minutes) {
  return static_cast<EngineMs>(std::llround(minutes * 60000.0));
}

struct PoolWorker {
  WorkerId id;
  const GpuClass* cls;
};

std::vector<PoolWorker> expand_pool(const PoolSpec& pool) {
  std::vector<PoolWorker> workers;
  WorkerId next = 0;
  for (const GpuClass& cls : pool) {
    for (std::uint32_t i = 0; i < cls.count; ++i)
      workers.push_back({next++, &cls});
  }
  return workers;
}

// Uniform in [0,1) from the top 53 bits of a 64-bit draw; keeps the sampling
// independent of library distribution internals.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exp_sample(std::mt19937_64& rng, double mean) {
  return -mean * std::log1p(-unit_uniform(rng));
}

}  // namespace

AvailabilityTrace make_static_trace(const PoolSpec& pool) {
  AvailabilityTrace trace;
  for (const PoolWorker& w : expand_pool(pool)) {
    trace.events.push_back({0, TraceAction::WorkerJoin, w.id, w.cls->model_name,
                            w.cls->speed_factor});
  }
  return trace;
}

AvailabilityTrace make_drain_trace(const PoolSpec& pool, double warmup_minutes,
                                   double rate_per_minute) {
  if (rate_per_minute <= 0.0)
    throw std::invalid_argument("drain rate must be positive");
  AvailabilityTrace trace = make_static_trace(pool);

  std::vector<PoolWorker> order = expand_pool(pool);
  std::stable_sort(order.begin(), order.end(),
                   [](const PoolWorker& a, const PoolWorker& b) {
                     return a.cls->speed_factor > b.cls->speed_factor;
                   });
  double t = warmup_minutes;
  for (const PoolWorker& w : order) {
    trace.events.push_back({minutes_to_ms(t), TraceAction::WorkerEvict, w.id,
                            w.cls->model_name, w.cls->speed_factor});
    t += 1.0 / rate_per_minute;
  }
  std::stable_sort(trace.events.begin(), trace.events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) {
                     return a.time_ms < b.time_ms;
                   });
  return trace;
}

AvailabilityTrace make_fluctuating_trace(std::uint64_t seed,
                                         std::uint32_t min_workers,
                                         std::uint32_t max_workers,
                                         double mean_dwell_minutes,
                                         double duration_minutes,
                                         const GpuClass& shape) {
  if (max_workers < min_workers)
    throw std::invalid_argument("max_workers < min_workers");
  if (mean_dwell_minutes <= 0.0 || duration_minutes <= 0.0)
    throw std::invalid_argument("dwell and duration must be positive");

  AvailabilityTrace trace;
  const EngineMs horizon = minutes_to_ms(duration_minutes);
  // Pinned floor: these slots never leave, so the pool can never dip below
  // min_workers.
  for (WorkerId id = 0; id < min_workers; ++id) {
    trace.events.push_back(
        {0, TraceAction::WorkerJoin, id, shape.model_name, shape.speed_factor});
  }
  std::mt19937_64 rng(seed);
  for (WorkerId id = min_workers; id < max_workers; ++id) {
    bool up = unit_uniform(rng) < 0.5;
    double t_min = up ? 0.0 : exp_sample(rng, mean_dwell_minutes);
    if (up) {
      trace.events.push_back({0, TraceAction::WorkerJoin, id, shape.model_name,
                              shape.speed_factor});
      t_min = exp_sample(rng, mean_dwell_minutes);
      up = false;  // next transition is an eviction
    } else {
      up = true;  // next transition is a join
    }
    while (minutes_to_ms(t_min) < horizon) {
      trace.events.push_back({minutes_to_ms(t_min),
                              up ? TraceAction::WorkerJoin
                                 : TraceAction::WorkerEvict,
                              id, shape.model_name, shape.speed_factor});
      t_min += exp_sample(rng, mean_dwell_minutes);
      up = !up;
    }
  }
  std::stable_sort(trace.events.begin(), trace.events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) {
                     return a.time_ms < b.time_ms;
                   });
  return trace;
}

std::string trace_to_csv(const AvailabilityTrace& trace) {
  std::string out = "time_ms,action,worker_id,gpu_model,speed_factor\n";
  char line[256];
  for (const TraceEvent& ev : trace.events) {
    if (ev.action == TraceAction::WorkerJoin) {
      std::snprintf(line, sizeof line, "%lld,join,%llu,%s,%.6f\n",
                    static_cast<long long>(ev.time_ms),
                    static_cast<unsigned long long>(ev.worker_id),
                    ev.gpu_model.c_str(), ev.speed_factor);
    } else {
      std::snprintf(line, sizeof line, "%lld,evict,%llu,,\n",
                    static_cast<long long>(ev.time_ms),
                    static_cast<unsigned long long>(ev.worker_id));
    }
    out += line;
  }
  return out;
}

AvailabilityTrace trace_from_csv(const std::string& text) {
  AvailabilityTrace trace;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("time_ms", 0) == 0) continue;  // header
    }
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    while (fields.size() < 5) fields.emplace_back();
    if (fields.size() != 5)
      throw std::runtime_error("trace csv line " + std::to_string(line_no) +
                               ": expected 5 fields");
    TraceEvent ev;
    try {
      ev.time_ms = std::stoll(fields[0]);
      ev.worker_id = std::stoull(fields[2]);
    } catch (const std::exception&) {
      throw std::runtime_error("trace csv line " + std::to_string(line_no) +
                               ": bad number");
    }
    if (fields[1] == "join") {
      ev.action = TraceAction::WorkerJoin;
      ev.gpu_model = fields[3];
      try {
        ev.speed_factor = std::stod(fields[4]);
      } catch (const std::exception&) {
        throw std::runtime_error("trace csv line " + std::to_string(line_no) +
                                 ": bad speed_factor");
      }
    } else if (fields[1] == "evict") {
      ev.action = TraceAction::WorkerEvict;
    } else {
      throw std::runtime_error("trace csv line " + std::to_string(line_no) +
                               ": unknown action '" + fields[1] + "'");
    }
    trace.events.push_back(ev);
  }
  for (std::size_t i = 1; i < trace.events.size(); ++i) {
    if (trace.events[i].time_ms < trace.events[i - 1].time_ms)
      throw std::runtime_error("trace csv: event times must be non-decreasing");
  }
  return trace;
}

}  // namespace gleaner
