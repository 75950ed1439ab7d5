#include "gleaner/worker_runtime.hpp"

#include <algorithm>
#include <cmath>

#include "gleaner/calibration.hpp"

namespace gleaner {
namespace {

EngineMs seconds_to_ms(double s) {
  return static_cast<EngineMs>(std::llround(s * 1000.0));
}

}  // namespace

StageBegin stage_begin(WorkerState& state,
                       const std::vector<StageItem>& manifest) {
  StageBegin out;
  std::uint64_t needed = 0;
  for (const StageItem& it : manifest) {
    auto found = state.cache.find(it.object_id);
    if (found != state.cache.end() && found->second.state == ObjectState::Present)
      continue;
    if (found == state.cache.end()) needed += it.size;
  }
  std::uint64_t free_bytes = state.cache_capacity - state.cache_used;
  if (needed > free_bytes) {
    // Cleanup: drop unreferenced task outputs oldest-first until it fits.
    std::uint64_t evictable = 0;
    for (const auto& [id, entry] : state.cache)
      if (entry.task_output && entry.state == ObjectState::Present)
        evictable += entry.size;
    if (needed > free_bytes + evictable) return out;  // StageInFailed
    std::vector<std::pair<std::uint64_t, Hash256>> victims;
    for (const auto& [id, entry] : state.cache)
      if (entry.task_output && entry.state == ObjectState::Present)
        victims.emplace_back(entry.last_use_seq, id);
    std::sort(victims.begin(), victims.end());
    for (const auto& [seq, id] : victims) {
      if (needed <= free_bytes) break;
      auto it = state.cache.find(id);
      state.cache_used -= it->second.size;
      free_bytes += it->second.size;
      state.cache.erase(it);
    }
  }
  out.ok = true;
  for (const StageItem& it : manifest) {
    auto found = state.cache.find(it.object_id);
    if (found != state.cache.end()) {
      if (found->second.state == ObjectState::Present)
        out.already_present.push_back(it.object_id);
      // Transferring duplicates ride the in-flight transfer.
      continue;
    }
    CacheEntry entry;
    entry.kind = it.kind;
    entry.size = it.size;
    entry.state = ObjectState::Transferring;
    entry.last_use_seq = ++state.use_seq;
    state.cache.emplace(it.object_id, entry);
    state.cache_used += it.size;
    out.to_transfer.push_back(it.object_id);
  }
  return out;
}

bool stage_object_done(WorkerState& state, const Hash256& object_id) {
  auto it = state.cache.find(object_id);
  if (it == state.cache.end() || it->second.state == ObjectState::Present)
    return false;
  it->second.state = ObjectState::Present;
  it->second.last_use_seq = ++state.use_seq;
  return true;
}

EnsureOutcome ensure_library_begin(WorkerState& state, const Hash256& recipe_id,
                                   const std::vector<Hash256>& recipe_objects) {
  auto lib = state.libraries.find(recipe_id);
  if (lib != state.libraries.end()) {
    return lib->second == LibraryState::Ready ? EnsureOutcome::AlreadyReady
                                              : EnsureOutcome::Materializing;
  }
  for (const Hash256& obj : recipe_objects) {
    auto it = state.cache.find(obj);
    if (it == state.cache.end() || it->second.state != ObjectState::Present)
      return EnsureOutcome::MissingObjects;
  }
  state.libraries.emplace(recipe_id, LibraryState::Materializing);
  ++state.context_materializations;  // exactly once per creation
  return EnsureOutcome::Materializing;
}

bool ensure_library_done(WorkerState& state, const Hash256& recipe_id) {
  auto lib = state.libraries.find(recipe_id);
  if (lib == state.libraries.end() || lib->second == LibraryState::Ready)
    return false;
  lib->second = LibraryState::Ready;
  return true;
}

bool invocation_begin(WorkerState& state, TaskId task, std::uint32_t attempt) {
  if (state.current_invocation) return false;  // 1:1 policy
  state.current_invocation = {task, attempt};
  ++state.sandboxes_created;
  return true;
}

void invocation_end(WorkerState& state) {
  if (!state.current_invocation) return;
  state.current_invocation.reset();
  ++state.sandboxes_destroyed;  // sandbox removed after output hand-off
}

ServeDecision serve_peer_begin(WorkerState& state, const Hash256& object_id) {
  ServeDecision d;
  auto it = state.cache.find(object_id);
  if (it == state.cache.end() || it->second.state != ObjectState::Present) {
    d.deny_reason = "absent";
    return d;
  }
  if (state.active_outbound_transfers >= state.transfer_cap) {
    d.deny_reason = "at-cap";
    return d;
  }
  ++state.active_outbound_transfers;
  d.accepted = true;
  return d;
}

void serve_peer_end(WorkerState& state) {
  if (state.active_outbound_transfers > 0) --state.active_outbound_transfers;
}

void evict_worker(WorkerState& state) {
  // No farewell, no flush: callers discard the state and cancel its events.
  state.cache.clear();
  state.cache_used = 0;
  state.libraries.clear();
  state.active_outbound_transfers = 0;
  state.current_invocation.reset();
}

EngineMs stage_duration_ms(const WorkloadModel& m, bool from_peer) {
  double sec = m.package_size * m.t_software_stage + m.model_size * m.t_model_stage;
  if (from_peer) sec *= calib::kPeerRateFactor;
  return seconds_to_ms(sec);
}

EngineMs invocation_duration_ms(const WorkloadModel& m, double speed_factor,
                                std::uint32_t batch, bool cold_load) {
  double t_inf = m.t_inf_ref * (cold_load ? m.cold_inference_penalty : 1.0);
  double sec = m.warm_dispatch_overhead + batch * t_inf / speed_factor;
  if (cold_load) sec += m.t_model_load;
  return seconds_to_ms(sec);
}

EngineMs materialize_duration_ms(const WorkloadModel& m) {
  return seconds_to_ms(m.t_model_load);
}

}  // namespace gleaner
