#include "gleaner/scheduler.hpp"

#include <algorithm>

namespace gleaner {
namespace {

EventRecord make_event(EngineMs now, EventKind kind) {
  EventRecord rec;
  rec.time = now;
  rec.kind = kind;
  return rec;
}

}  // namespace

bool check_conservation(const ManagerState& state) {
  return state.ready_queue.size() + state.running.size() +
             state.results.size() ==
         state.submitted_count;
}

std::size_t submit_tasks(ManagerState& state, EventLog& log, EngineMs now,
                         const std::vector<TaskSpec>& specs) {
  std::size_t accepted = 0;
  for (const TaskSpec& spec : specs) {
    if (!state.known_tasks.insert(spec.task_id).second) {
      EventRecord rec = make_event(now, EventKind::SubmitRejected);
      rec.task = spec.task_id;
      log.append(rec);
      continue;
    }
    state.specs.emplace(spec.task_id, spec);
    state.attempts.emplace(spec.task_id, 0);
    state.ready_queue.push_back(spec);
    ++state.submitted_count;
    ++accepted;
    EventRecord rec = make_event(now, EventKind::TaskSubmitted);
    rec.task = spec.task_id;
    rec.aux1 = spec.batch_size;
    log.append(rec);
  }
  return accepted;
}

void worker_joined(ManagerState& state, EventLog& log, EngineMs now,
                   WorkerId id, const WorkerProfile& profile,
                   const std::string& addr) {
  WorkerView view;
  view.profile = profile;
  view.addr = addr;
  state.worker_table[id] = std::move(view);
  EventRecord rec = make_event(now, EventKind::WorkerJoined);
  rec.worker = id;
  // Speed factor recorded in parts-per-million for the integer aux field.
  rec.aux1 = static_cast<std::uint64_t>(profile.speed_factor * 1e6 + 0.5);
  log.append(rec);
}

std::vector<DispatchDecision> match_tasks(
    ManagerState& state, EventLog& log, EngineMs now,
    const std::map<Hash256, std::vector<Hash256>>& recipe_objects) {
  std::vector<DispatchDecision> decisions;
  std::vector<WorkerId> idle;
  for (const auto& [id, view] : state.worker_table)
    if (!view.running_task) idle.push_back(id);
  while (!idle.empty() && !state.ready_queue.empty()) {
    const TaskSpec spec = state.ready_queue.front();
    // Rank: library > cached > cold, then higher speed, then lower id.  The
    // idle list is id-ascending, so strict improvement keeps the lowest id.
    std::size_t best = 0;
    int best_rank = 3;
    double best_speed = -1.0;
    for (std::size_t i = 0; i < idle.size(); ++i) {
      const WorkerView& view = state.worker_table.at(idle[i]);
      int rank = 2;
      if (view.ready_libraries.count(spec.recipe_id)) {
        rank = 0;
      } else {
        auto objs = recipe_objects.find(spec.recipe_id);
        if (objs != recipe_objects.end()) {
          bool all_cached = true;
          for (const Hash256& obj : objs->second)
            if (!view.cached_objects.count(obj)) {
              all_cached = false;
              break;
            }
          if (all_cached) rank = 1;
        }
      }
      double speed = view.profile.speed_factor;
      if (rank < best_rank ||
          (rank == best_rank && speed > best_speed)) {
        best = i;
        best_rank = rank;
        best_speed = speed;
      }
    }
    WorkerId chosen = idle[best];
    state.ready_queue.pop_front();
    state.running.emplace(spec.task_id, chosen);
    state.worker_table.at(chosen).running_task = spec.task_id;
    idle.erase(idle.begin() + static_cast<std::ptrdiff_t>(best));

    DispatchDecision d;
    d.task_id = spec.task_id;
    d.attempt = state.attempts.at(spec.task_id);
    d.worker_id = chosen;
    d.path = best_rank == 0   ? DispatchPath::LibraryReady
             : best_rank == 1 ? DispatchPath::CachedOnly
                              : DispatchPath::Cold;
    decisions.push_back(d);

    EventRecord rec = make_event(now, EventKind::TaskDispatched);
    rec.task = spec.task_id;
    rec.attempt = d.attempt;
    rec.worker = chosen;
    rec.aux1 = static_cast<std::uint64_t>(d.path);
    log.append(rec);
  }
  return decisions;
}

std::optional<TaskId> on_worker_evicted(ManagerState& state, EventLog& log,
                                        EngineMs now, WorkerId id) {
  auto it = state.worker_table.find(id);
  if (it == state.worker_table.end()) {
    // Eviction races are expected: warn, do not fail.
    EventRecord rec = make_event(now, EventKind::ProtocolError);
    rec.worker = id;
    rec.aux1 = 1;  // unknown-worker eviction
    log.append(rec);
    return std::nullopt;
  }
  std::optional<TaskId> requeued = it->second.running_task;
  EventRecord ev = make_event(now, EventKind::WorkerEvicted);
  ev.worker = id;
  if (requeued) {
    const TaskSpec& spec = state.specs.at(*requeued);
    ev.task = *requeued;
    ev.aux1 = spec.batch_size;  // inferences lost with this eviction
  }
  log.append(ev);
  state.worker_table.erase(it);
  if (requeued) {
    TaskId task = *requeued;
    state.running.erase(task);
    std::uint32_t attempt = ++state.attempts.at(task);
    state.ready_queue.push_front(state.specs.at(task));
    EventRecord rec = make_event(now, EventKind::TaskRequeued);
    rec.task = task;
    rec.attempt = attempt;
    rec.worker = id;
    log.append(rec);
  }
  return requeued;
}

void on_worker_retired(ManagerState& state, EventLog& log, EngineMs now,
                       WorkerId id) {
  auto it = state.worker_table.find(id);
  if (it == state.worker_table.end() || it->second.running_task) return;
  state.worker_table.erase(it);
  EventRecord rec = make_event(now, EventKind::WorkerRetired);
  rec.worker = id;
  log.append(rec);
}

ResultDisposition on_result(ManagerState& state, EventLog& log, EngineMs now,
                            const InvocationResult& result) {
  if (!state.known_tasks.count(result.task_id)) {
    EventRecord rec = make_event(now, EventKind::ProtocolError);
    rec.task = result.task_id;
    rec.attempt = result.attempt;
    rec.aux1 = 2;  // result for unknown task
    log.append(rec);
    return ResultDisposition::UnknownTask;
  }
  auto run = state.running.find(result.task_id);
  bool current =
      run != state.running.end() &&
      state.attempts.at(result.task_id) == result.attempt;
  if (!current) {
    // Stale attempt (superseded by a requeue) or already-settled task.
    EventRecord rec = make_event(now, EventKind::ResultDiscarded);
    rec.task = result.task_id;
    rec.attempt = result.attempt;
    log.append(rec);
    return ResultDisposition::StaleDiscarded;
  }
  WorkerId worker = run->second;
  state.running.erase(run);
  auto wit = state.worker_table.find(worker);
  if (wit != state.worker_table.end()) wit->second.running_task.reset();

  if (result.outcome == TaskOutcome::Completed) {
    state.results.emplace(result.task_id, result);
    EventRecord rec = make_event(now, EventKind::TaskCompleted);
    rec.task = result.task_id;
    rec.attempt = result.attempt;
    rec.worker = worker;
    rec.aux1 = result.inferences_done;
    log.append(rec);
  } else {
    // Failure (e.g. StageInFailed): reschedule elsewhere.
    EventRecord fail = make_event(now, EventKind::TaskFailed);
    fail.task = result.task_id;
    fail.attempt = result.attempt;
    fail.worker = worker;
    log.append(fail);
    std::uint32_t attempt = ++state.attempts.at(result.task_id);
    state.ready_queue.push_front(state.specs.at(result.task_id));
    EventRecord rec = make_event(now, EventKind::TaskRequeued);
    rec.task = result.task_id;
    rec.attempt = attempt;
    rec.worker = worker;
    log.append(rec);
  }
  return ResultDisposition::Accepted;
}

FactoryActions factory_adjust(const ManagerState& state,
                              std::uint32_t availability,
                              const FactoryPolicy& policy) {
  FactoryActions actions;
  std::uint32_t connected = static_cast<std::uint32_t>(state.worker_table.size());
  std::vector<WorkerId> idle;
  for (const auto& [id, view] : state.worker_table)
    if (!view.running_task) idle.push_back(id);

  if (!state.ready_queue.empty()) {
    std::uint32_t headroom =
        connected < policy.max_workers ? policy.max_workers - connected : 0;
    actions.submit =
        std::min({availability, headroom, policy.workers_per_cycle});
    if (connected > policy.max_workers) {
      // Shrink back to max: release idle workers, newest first.
      std::uint32_t excess = connected - policy.max_workers;
      for (auto it = idle.rbegin(); it != idle.rend() && excess > 0; ++it) {
        actions.retire.push_back(*it);
        --excess;
      }
    }
  } else {
    // No work: release idle workers but never drop below min.
    std::uint32_t releasable =
        connected > policy.min_workers ? connected - policy.min_workers : 0;
    for (auto it = idle.rbegin();
         it != idle.rend() && actions.retire.size() < releasable; ++it)
      actions.retire.push_back(*it);
  }
  return actions;
}

}  // namespace gleaner
