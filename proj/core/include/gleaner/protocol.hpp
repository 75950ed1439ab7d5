#pragma once

// Wire protocol: message catalog and byte framing shared by live mode and the
// simulator's event loop.  Frame = 4-byte big-endian length (counting the tag
// byte and payload), 1-byte message tag, payload.  All integers big-endian;
// strings are u16 length + bytes; object ids are raw 32-byte hashes.  The
// full byte-level contract with hex examples lives in PROTOCOL.md.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gleaner/types.hpp"

namespace gleaner {

enum class ObjectKind : std::uint8_t {
  FunctionCode = 0,
  DependencyPackage = 1,
  ContextCode = 2,
  ContextInput = 3,
};

// Where a staged object should be fetched from: a dialable "host:port" for
// either the manager's store service or a peer worker's cache.
struct ObjectSource {
  bool from_peer = false;
  std::string addr;
  bool operator==(const ObjectSource&) const = default;
};

struct StageItem {
  Hash256 object_id;
  ObjectKind kind = ObjectKind::ContextInput;
  std::uint64_t size = 0;
  ObjectSource source;
  bool operator==(const StageItem&) const = default;
};

// Manager -> worker.
struct StageIn {
  std::vector<StageItem> manifest;
  bool operator==(const StageIn&) const = default;
};
struct MaterializeContext {
  Hash256 recipe_id;
  bool operator==(const MaterializeContext&) const = default;
};
struct Invoke {
  TaskId task_id = 0;
  std::uint32_t attempt = 0;
  Hash256 recipe_id;
  // Batch manifest: contiguous slice of the inference stream.
  std::uint64_t first_item = 0;
  std::uint32_t item_count = 0;
  bool operator==(const Invoke&) const = default;
};
struct RetireWorker {
  bool operator==(const RetireWorker&) const = default;
};

// Worker -> manager.
struct Joined {
  WorkerProfile profile;
  std::string listen_addr;  // peer-transfer rendezvous for this worker
  bool operator==(const Joined&) const = default;
};
struct CacheAck {
  Hash256 object_id;
  bool operator==(const CacheAck&) const = default;
};
struct LibraryReady {
  Hash256 recipe_id;
  std::uint64_t materialize_ms = 0;
  bool operator==(const LibraryReady&) const = default;
};
struct Result {
  InvocationResult result;
  bool operator==(const Result&) const = default;
};
struct TransferDone {
  Hash256 object_id;
  std::string peer_addr;
  bool operator==(const TransferDone&) const = default;
};

// Worker -> worker.
struct Fetch {
  Hash256 object_id;
  bool operator==(const Fetch&) const = default;
};
struct Chunk {
  Hash256 object_id;
  std::uint64_t offset = 0;
  std::vector<std::uint8_t> bytes;
  bool operator==(const Chunk&) const = default;
};
struct FetchDenied {
  std::string reason;  // "at-cap" | "absent"
  bool operator==(const FetchDenied&) const = default;
};

using Message =
    std::variant<StageIn, MaterializeContext, Invoke, RetireWorker, Joined,
                 CacheAck, LibraryReady, Result, TransferDone, Fetch, Chunk,
                 FetchDenied>;

// Peer transfers stream 1 MiB chunks: bounded memory, negligible per-chunk
// overhead at multi-GB object sizes.
inline constexpr std::size_t kChunkSize = 1 << 20;

std::vector<std::uint8_t> encode_frame(const Message& msg);

struct DecodeResult {
  enum class Status { Ok, NeedMore, Error };
  Status status = Status::NeedMore;
  Message msg;                  // valid when status == Ok
  std::size_t consumed = 0;     // bytes consumed when status == Ok
  std::uint64_t need_more = 0;  // additional bytes needed when NeedMore
  std::size_t error_offset = 0; // where decoding failed when Error
  std::string error_reason;
};

// Decodes one frame from the front of the buffer.  Never throws on malformed
// input: unknown tags, truncated or oversized payloads, and trailing garbage
// inside a frame all yield Status::Error with an offset and reason.
DecodeResult decode_frame(const std::uint8_t* data, std::size_t size);
DecodeResult decode_frame(const std::vector<std::uint8_t>& buf);

const char* message_tag_name(const Message& msg);

}  // namespace gleaner
