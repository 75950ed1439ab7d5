#include "gleaner/event_log.hpp"

#include <stdexcept>

#include "gleaner/sha256.hpp"

namespace gleaner {

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::TaskSubmitted: return "task_submitted";
    case EventKind::WorkerJoined: return "worker_joined";
    case EventKind::WorkerRetired: return "worker_retired";
    case EventKind::WorkerEvicted: return "worker_evicted";
    case EventKind::DispatchEligible: return "dispatch_eligible";
    case EventKind::TaskDispatched: return "task_dispatched";
    case EventKind::StageInStarted: return "stage_in_started";
    case EventKind::StageInFinished: return "stage_in_finished";
    case EventKind::StageInFailed: return "stage_in_failed";
    case EventKind::TransferStarted: return "transfer_started";
    case EventKind::TransferFinished: return "transfer_finished";
    case EventKind::MaterializeStarted: return "materialize_started";
    case EventKind::MaterializeFinished: return "materialize_finished";
    case EventKind::LibraryHit: return "library_hit";
    case EventKind::InvocationStarted: return "invocation_started";
    case EventKind::TaskCompleted: return "task_completed";
    case EventKind::TaskFailed: return "task_failed";
    case EventKind::TaskRequeued: return "task_requeued";
    case EventKind::ResultDiscarded: return "result_discarded";
    case EventKind::RunCompleted: return "run_completed";
    case EventKind::RunStalled: return "run_stalled";
    case EventKind::SubmitRejected: return "submit_rejected";
    case EventKind::ProtocolError: return "protocol_error";
  }
  return "unknown";
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

}  // namespace

void append_record_bytes(const EventRecord& rec,
                         std::vector<std::uint8_t>& out) {
  put_u64(out, rec.sequence_no);
  put_u64(out, static_cast<std::uint64_t>(rec.time));
  out.push_back(static_cast<std::uint8_t>(rec.kind));
  out.push_back(0);
  out.push_back(0);
  out.push_back(0);
  put_u64(out, rec.task);
  put_u32(out, rec.attempt);
  put_u64(out, rec.worker);
  put_u64(out, rec.aux1);
  put_u64(out, rec.aux2);
}

const EventRecord& EventLog::append(EventRecord rec) {
  if (!records_.empty() && rec.time < records_.back().time) {
    throw std::logic_error("event log: time went backwards");
  }
  rec.sequence_no = records_.size();
  records_.push_back(rec);
  return records_.back();
}

Hash256 EventLog::digest() const {
  Sha256 hasher;
  std::vector<std::uint8_t> buf;
  buf.reserve(56);
  for (const auto& rec : records_) {
    buf.clear();
    append_record_bytes(rec, buf);
    hasher.update(buf.data(), buf.size());
  }
  return hasher.finish();
}

std::vector<std::uint8_t> EventLog::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(records_.size() * 56);
  for (const auto& rec : records_) append_record_bytes(rec, out);
  return out;
}

}  // namespace gleaner
