#pragma once

// Manager-side brain: ready queue, context-aware matchmaking, capped
// spanning-tree context distribution, eviction recovery, and the factory
// policy that grows/shrinks the pool.  Pure state transitions over
// ManagerState; the simulator and live manager drive them from their event
// loops and apply durations themselves.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gleaner/event_log.hpp"
#include "gleaner/scenario.hpp"
#include "gleaner/types.hpp"

namespace gleaner {

// Manager's view of one connected worker.
struct WorkerView {
  WorkerProfile profile;
  std::string addr;                     // live-mode peer rendezvous
  std::set<Hash256> cached_objects;     // acked Present objects
  std::set<Hash256> ready_libraries;    // recipes with a Ready library
  std::set<Hash256> materializing;      // recipes mid-materialization
  std::uint32_t active_transfers = 0;   // outbound peer streams
  std::optional<TaskId> running_task;
  bool staging = false;                 // base-context stage in flight
  EngineMs staged_at = -1;              // when the base context became Present
};

struct ManagerState {
  std::deque<TaskSpec> ready_queue;
  std::unordered_map<TaskId, WorkerId> running;
  std::map<WorkerId, WorkerView> worker_table;  // ordered: deterministic scans
  std::unordered_map<TaskId, InvocationResult> results;
  std::unordered_map<TaskId, std::uint32_t> attempts;  // current attempt
  std::unordered_set<TaskId> known_tasks;
  std::unordered_map<TaskId, TaskSpec> specs;
  std::uint64_t submitted_count = 0;
};

// Conservation check: |ready| + |running| + |results| == |submitted|.
bool check_conservation(const ManagerState& state);

// Appends unseen tasks to the ready queue in submission order; duplicates are
// rejected with a SubmitRejected event.  Returns accepted count.
std::size_t submit_tasks(ManagerState& state, EventLog& log, EngineMs now,
                         const std::vector<TaskSpec>& specs);

void worker_joined(ManagerState& state, EventLog& log, EngineMs now,
                   WorkerId id, const WorkerProfile& profile,
                   const std::string& addr = {});

// How much context the chosen worker is missing for the dispatched task.
enum class DispatchPath : std::uint8_t { LibraryReady, CachedOnly, Cold };

struct DispatchDecision {
  TaskId task_id = 0;
  std::uint32_t attempt = 0;
  WorkerId worker_id = 0;
  DispatchPath path = DispatchPath::Cold;
};

// Greedy matchmaking over idle workers.  Preference per ready task: worker
// with a Ready library, else all objects cached, else cold (caller stages);
// ties broken by higher speed_factor then lower worker_id.  Dispatched tasks
// move to running; each decision logs TaskDispatched (aux1 = path).
// recipe_objects maps recipe_id -> object ids the recipe needs on a worker.
std::vector<DispatchDecision> match_tasks(
    ManagerState& state, EventLog& log, EngineMs now,
    const std::map<Hash256, std::vector<Hash256>>& recipe_objects);

// Removes the worker; its running task (if any) is requeued at the FRONT with
// attempt+1.  Unknown workers log a ProtocolError warning (eviction races are
// expected).  Returns the requeued task, if any.
std::optional<TaskId> on_worker_evicted(ManagerState& state, EventLog& log,
                                        EngineMs now, WorkerId id);

// Graceful retirement of an idle worker (factory shrink); distinct from
// eviction: logged as WorkerRetired.
void on_worker_retired(ManagerState& state, EventLog& log, EngineMs now,
                       WorkerId id);

enum class ResultDisposition : std::uint8_t { Accepted, StaleDiscarded, UnknownTask };

// Moves a running task to results exactly once; stale attempts are discarded
// with a ResultDiscarded event; unknown tasks log ProtocolError.  Failed
// outcomes requeue the task (front) instead of recording a result.
ResultDisposition on_result(ManagerState& state, EventLog& log, EngineMs now,
                            const InvocationResult& result);

// One directed transfer in a distribution plan; round r transfers start only
// after round r-1 completes (uniform transfer times assumed by the planner).
struct TransferDirective {
  std::uint32_t round = 0;
  bool from_manager = true;
  WorkerId source = 0;  // valid when !from_manager
  WorkerId target = 0;
};

// Capped spanning-tree distribution: every target acquires the recipe
// objects; no node (manager included) sources more than `cap` concurrent
// transfers; newly-completed holders serve from the next round.  Directive
// order is deterministic (rounds ascending, sorted worker ids within).
std::vector<TransferDirective> plan_context_distribution(
    const std::vector<WorkerId>& existing_holders,
    const std::vector<WorkerId>& targets, std::uint32_t cap);

std::uint32_t plan_round_count(const std::vector<TransferDirective>& plan);

struct FactoryActions {
  std::uint32_t submit = 0;             // new single-GPU workers to request
  std::vector<WorkerId> retire;         // idle workers to release
};

// Pool-sizing policy: with work pending, grow by min(availability,
// max - connected, workers_per_cycle); never exceed max.  With an empty
// ready queue, release idle workers down to min.
FactoryActions factory_adjust(const ManagerState& state,
                              std::uint32_t availability,
                              const FactoryPolicy& policy);

}  // namespace gleaner
