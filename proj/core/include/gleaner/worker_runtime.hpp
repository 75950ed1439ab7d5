#pragma once

// Worker-side pilot state: local object cache, context-hosting library
// lifecycle, per-invocation sandbox accounting, and the peer-transfer cap.
// Pure state transitions shared by the simulator and live mode; durations are
// computed by the helpers at the bottom and applied by the caller's clock.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gleaner/protocol.hpp"
#include "gleaner/scenario.hpp"
#include "gleaner/types.hpp"

namespace gleaner {

enum class ObjectState : std::uint8_t { Transferring, Present };

struct CacheEntry {
  ObjectKind kind = ObjectKind::ContextInput;
  std::uint64_t size = 0;
  ObjectState state = ObjectState::Transferring;
  std::uint64_t last_use_seq = 0;  // for oldest-first cleanup
  bool task_output = false;        // only unreferenced outputs are evictable
};

enum class LibraryState : std::uint8_t { Materializing, Ready };

struct WorkerState {
  WorkerId id = 0;
  WorkerProfile profile;
  std::uint64_t cache_capacity = 0;  // bytes
  std::uint64_t cache_used = 0;      // bytes across Transferring+Present
  std::map<Hash256, CacheEntry> cache;
  std::map<Hash256, LibraryState> libraries;
  std::uint32_t transfer_cap = 3;
  std::uint32_t active_outbound_transfers = 0;
  std::optional<std::pair<TaskId, std::uint32_t>> current_invocation;
  std::uint64_t context_materializations = 0;
  std::uint64_t sandboxes_created = 0;
  std::uint64_t sandboxes_destroyed = 0;
  std::uint64_t use_seq = 0;
};

// Begins staging every absent object in the manifest: entries appear as
// Transferring and count against capacity immediately.  Objects already
// Present are acked without re-transfer (returned in `already_present`).
// Returns false (StageInFailed) when the manifest cannot fit even after
// evicting unreferenced task outputs oldest-first.
struct StageBegin {
  bool ok = false;
  std::vector<Hash256> to_transfer;     // absent objects now Transferring
  std::vector<Hash256> already_present; // immediate CacheAck, no transfer
};
StageBegin stage_begin(WorkerState& state, const std::vector<StageItem>& manifest);

// Marks one staged object Present (transfer finished); returns false if the
// object is unknown or already Present.
bool stage_object_done(WorkerState& state, const Hash256& object_id);

// Library lifecycle.  ensure_library_begin: Ready -> immediate hit
// (materialize_ms would be 0); absent -> creates a Materializing entry and
// increments context_materializations (exactly once per creation; repeated
// begins while Materializing do not re-count).  Requires all recipe objects
// Present — missing objects signal a scheduler/worker cache divergence.
enum class EnsureOutcome : std::uint8_t { AlreadyReady, Materializing, MissingObjects };
EnsureOutcome ensure_library_begin(WorkerState& state, const Hash256& recipe_id,
                                   const std::vector<Hash256>& recipe_objects);
bool ensure_library_done(WorkerState& state, const Hash256& recipe_id);

// Sandbox bracket around one invocation (1:1 policy enforced).
bool invocation_begin(WorkerState& state, TaskId task, std::uint32_t attempt);
void invocation_end(WorkerState& state);

// Peer-transfer service: Present object and a free outbound slot -> accepted
// (counter incremented); otherwise the denial reason "at-cap" or "absent".
struct ServeDecision {
  bool accepted = false;
  std::string deny_reason;
};
ServeDecision serve_peer_begin(WorkerState& state, const Hash256& object_id);
void serve_peer_end(WorkerState& state);

// Eviction: the worker vanishes with no cleanup; callers drop the state and
// cancel its pending events.  Provided for symmetry/live use.
void evict_worker(WorkerState& state);

// --- Duration model -------------------------------------------------------
// Shared by simulator and live mode (live scales the result down).

// Stage-in of the base context (software package + model/context payload).
// Manager sources pay sec_per_gb as configured; peer sources pay
// kPeerRateFactor of it.
EngineMs stage_duration_ms(const WorkloadModel& m, bool from_peer);

// Invocation window.  cold_load = true means the context is loaded inside
// the window (no resident library): adds t_model_load and the cold
// per-inference penalty.  Warm: warm_dispatch_overhead + B * t_inf / speed.
EngineMs invocation_duration_ms(const WorkloadModel& m, double speed_factor,
                                std::uint32_t batch, bool cold_load);

// Library materialization (model load into a resident process).
EngineMs materialize_duration_ms(const WorkloadModel& m);

}  // namespace gleaner
