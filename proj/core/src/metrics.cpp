#include "gleaner/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace gleaner {
namespace {

struct Welford {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  void add(double x) {
    if (n == 0) {
      lo = hi = x;
    } else {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  DistStats stats() const {
    DistStats s;
    s.count = n;
    if (n == 0) return s;
    s.mean = mean;
    s.std_dev = n > 1 ? std::sqrt(m2 / static_cast<double>(n)) : 0.0;
    s.min = lo;
    s.max = hi;
    return s;
  }
};

}  // namespace

const char* run_status_name(RunStatus status) {
  switch (status) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Stalled: return "stalled";
    default: return "unknown";
  }
}

RunSummary summarize(const std::vector<EventRecord>& log) {
  RunSummary out;
  Welford task_time;
  Welford task_time_wait;
  // (task, attempt) -> timestamps for per-attempt durations.
  auto key = [](TaskId t, std::uint32_t a) {
    return t * 1000003ULL + a;  // attempts are tiny; no practical collisions
  };
  std::unordered_map<std::uint64_t, EngineMs> dispatched_at;
  std::unordered_map<std::uint64_t, EngineMs> started_at;
  std::uint32_t connected = 0;
  EngineMs eligible_at = -1;
  EngineMs last_completion = -1;
  double connected_area = 0.0;
  EngineMs span_begin = 0;
  EngineMs prev_time = 0;
  bool any = false;

  for (std::size_t i = 0; i < log.size(); ++i) {
    const EventRecord& ev = log[i];
    if (ev.sequence_no != i)
      throw std::runtime_error("malformed event log at sequence " +
                               std::to_string(ev.sequence_no));
    if (!any) {
      span_begin = ev.time;
      prev_time = ev.time;
      any = true;
    }
    if (ev.time < prev_time)
      throw std::runtime_error("time regression at sequence " +
                               std::to_string(ev.sequence_no));
    connected_area += static_cast<double>(connected) *
                      static_cast<double>(ev.time - prev_time);
    prev_time = ev.time;

    switch (ev.kind) {
      case EventKind::DispatchEligible:
        if (eligible_at < 0) eligible_at = ev.time;
        break;
      case EventKind::WorkerJoined:
        ++connected;
        out.connected_workers_series.emplace_back(ev.time, connected);
        break;
      case EventKind::WorkerRetired:
      case EventKind::WorkerEvicted:
        if (connected > 0) --connected;
        out.connected_workers_series.emplace_back(ev.time, connected);
        if (ev.kind == EventKind::WorkerEvicted) {
          ++out.evictions;
          out.inferences_lost += ev.aux1;  // batch of the killed task, or 0
        }
        break;
      case EventKind::TaskDispatched:
        dispatched_at[key(ev.task, ev.attempt)] = ev.time;
        break;
      case EventKind::InvocationStarted:
        started_at[key(ev.task, ev.attempt)] = ev.time;
        break;
      case EventKind::MaterializeFinished:
        ++out.materializations;
        break;
      case EventKind::TaskCompleted: {
        ++out.tasks_completed;
        out.completed_inferences += ev.aux1;
        out.completed_inferences_series.emplace_back(ev.time,
                                                     out.completed_inferences);
        last_completion = ev.time;
        auto k = key(ev.task, ev.attempt);
        auto st = started_at.find(k);
        if (st != started_at.end()) {
          double t = static_cast<double>(ev.time - st->second) / 1000.0;
          task_time.add(t);
          out.task_times_s.push_back(t);
          out.task_batches.push_back(static_cast<std::uint32_t>(ev.aux1));
        }
        auto dp = dispatched_at.find(k);
        if (dp != dispatched_at.end())
          task_time_wait.add(static_cast<double>(ev.time - dp->second) /
                             1000.0);
        break;
      }
      case EventKind::RunCompleted:
        out.status = RunStatus::Completed;
        break;
      case EventKind::RunStalled:
        out.status = RunStatus::Stalled;
        break;
      default:
        break;
    }
  }
  out.task_time = task_time.stats();
  out.task_time_incl_wait = task_time_wait.stats();
  if (eligible_at >= 0 && last_completion >= eligible_at)
    out.makespan_s = static_cast<double>(last_completion - eligible_at) / 1000.0;
  EngineMs span = any ? prev_time - span_begin : 0;
  out.avg_connected_workers =
      span > 0 ? connected_area / static_cast<double>(span)
               : static_cast<double>(connected);
  return out;
}

std::uint64_t completed_inferences_at(const RunSummary& summary, EngineMs time) {
  std::uint64_t count = 0;
  for (const auto& [t, v] : summary.completed_inferences_series) {
    if (t > time) break;
    count = v;
  }
  return count;
}

Histogram histogram(const std::vector<double>& values, double bucket_width,
                    double trim_above) {
  if (bucket_width <= 0.0)
    throw std::invalid_argument("bucket_width must be positive");
  Histogram h;
  h.bucket_width = bucket_width;
  std::vector<std::pair<std::int64_t, std::uint64_t>> acc;
  for (double v : values) {
    if (v > trim_above) {
      ++h.trimmed;
      continue;
    }
    acc.emplace_back(static_cast<std::int64_t>(std::floor(v / bucket_width)),
                     1);
  }
  std::sort(acc.begin(), acc.end());
  for (const auto& [bucket, one] : acc) {
    double lo = static_cast<double>(bucket) * bucket_width;
    if (!h.buckets.empty() && h.buckets.back().first == lo)
      ++h.buckets.back().second;
    else
      h.buckets.emplace_back(lo, 1);
  }
  return h;
}

}  // namespace gleaner
