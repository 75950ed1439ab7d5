#pragma once

// Append-only event stream emitted by the engine and consumed by metrics.
// Records are flat fixed-width values so the whole log can be serialized
// and digested byte-stably for determinism checks.

#include <cstdint>
#include <string>
#include <vector>

#include "gleaner/types.hpp"

namespace gleaner {

// Actor id for the manager in worker-id fields.
inline constexpr WorkerId kManagerActor = ~std::uint64_t{0};

enum class EventKind : std::uint8_t {
  TaskSubmitted = 0,       // task, aux1 = batch size
  WorkerJoined = 1,        // worker, aux1 = speed_factor * 1e6
  WorkerRetired = 2,       // worker
  WorkerEvicted = 3,       // worker, aux1 = 1 if it was running a task
  DispatchEligible = 4,    // aux1 = joined workers at that instant
  TaskDispatched = 5,      // task, attempt, worker
  StageInStarted = 6,      // worker, aux1 = total bytes, aux2 = source
  StageInFinished = 7,     // worker
  StageInFailed = 8,       // task, attempt, worker
  TransferStarted = 9,     // worker = receiver, aux2 = source worker
  TransferFinished = 10,   // worker = receiver, aux2 = source worker
  MaterializeStarted = 11, // worker
  MaterializeFinished = 12,// worker, aux1 = materialize duration ms
  LibraryHit = 13,         // worker (context already resident)
  InvocationStarted = 14,  // task, attempt, worker
  TaskCompleted = 15,      // task, attempt, worker, aux1 = inferences
  TaskFailed = 16,         // task, attempt, worker
  TaskRequeued = 17,       // task, attempt (new), aux1 = inferences lost
  ResultDiscarded = 18,    // task, attempt (stale)
  RunCompleted = 19,
  RunStalled = 20,         // aux1 = tasks still outstanding
  SubmitRejected = 21,     // task (duplicate task_id)
  ProtocolError = 22,      // task/worker as applicable (unexpected message)
};

const char* event_kind_name(EventKind kind);

struct EventRecord {
  std::uint64_t sequence_no = 0;
  EngineMs time = 0;
  EventKind kind = EventKind::TaskSubmitted;
  TaskId task = 0;
  std::uint32_t attempt = 0;
  WorkerId worker = kManagerActor;
  std::uint64_t aux1 = 0;
  std::uint64_t aux2 = 0;

  bool operator==(const EventRecord&) const = default;
};

// Fixed 56-byte big-endian serialization of one record; the on-disk event
// log is these records concatenated (documented in the README).
void append_record_bytes(const EventRecord& rec, std::vector<std::uint8_t>& out);

class EventLog {
 public:
  // Appends, assigning the next sequence number.  Time must not decrease.
  const EventRecord& append(EventRecord rec);

  const std::vector<EventRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Digest over the canonical serialization of all records.
  Hash256 digest() const;

  std::vector<std::uint8_t> serialize() const;

 private:
  std::vector<EventRecord> records_;
};

}  // namespace gleaner
