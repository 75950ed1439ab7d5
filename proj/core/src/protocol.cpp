#include "gleaner/protocol.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace gleaner {
namespace {

// Message tag bytes; grouped by direction (manager->worker 0x0x,
// worker->manager 0x1x, worker->worker 0x2x).
enum Tag : std::uint8_t {
  kTagStageIn = 0x01,
  kTagMaterializeContext = 0x02,
  kTagInvoke = 0x03,
  kTagRetireWorker = 0x04,
  kTagJoined = 0x10,
  kTagCacheAck = 0x11,
  kTagLibraryReady = 0x12,
  kTagResult = 0x13,
  kTagTransferDone = 0x14,
  kTagFetch = 0x20,
  kTagChunk = 0x21,
  kTagFetchDenied = 0x22,
};

struct Writer {
  std::vector<std::uint8_t> out;

  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8)
      out.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8)
      out.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void hash(const Hash256& h) {
    out.insert(out.end(), h.bytes.begin(), h.bytes.end());
  }
  void str(const std::string& s) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max())
      throw std::length_error("string field exceeds u16 length");
    u16(static_cast<std::uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  void bytes(const std::vector<std::uint8_t>& b) {
    if (b.size() > std::numeric_limits<std::uint32_t>::max())
      throw std::length_error("byte field exceeds u32 length");
    u32(static_cast<std::uint32_t>(b.size()));
    out.insert(out.end(), b.begin(), b.end());
  }
};

// Cursor over one frame's payload.  fail() records the first error and turns
// every subsequent read into a no-op so decode logic can stay linear.
struct Reader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos = 0;  // absolute offset within the whole frame buffer
  bool failed = false;
  std::size_t error_offset = 0;
  std::string error_reason;

  bool fail(const char* reason) {
    if (!failed) {
      failed = true;
      error_offset = pos;
      error_reason = reason;
    }
    return false;
  }
  bool take(std::size_t n) {
    if (failed) return false;
    if (size - pos < n) return fail("truncated payload");
    return true;
  }
  std::uint8_t u8() {
    if (!take(1)) return 0;
    return data[pos++];
  }
  std::uint16_t u16() {
    if (!take(2)) return 0;
    std::uint16_t v = static_cast<std::uint16_t>(data[pos] << 8 | data[pos + 1]);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    if (!take(4)) return 0;
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | data[pos + i];
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    if (!take(8)) return 0;
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | data[pos + i];
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Hash256 hash() {
    Hash256 h{};
    if (!take(32)) return h;
    std::memcpy(h.bytes.data(), data + pos, 32);
    pos += 32;
    return h;
  }
  std::string str() {
    std::uint16_t n = u16();
    if (!take(n)) return {};
    std::string s(reinterpret_cast<const char*>(data + pos), n);
    pos += n;
    return s;
  }
  std::vector<std::uint8_t> bytes() {
    std::uint32_t n = u32();
    if (!take(n)) return {};
    std::vector<std::uint8_t> b(data + pos, data + pos + n);
    pos += n;
    return b;
  }
};

void encode_payload(Writer& w, const StageIn& m) {
  if (m.manifest.size() > std::numeric_limits<std::uint32_t>::max())
    throw std::length_error("manifest too large");
  w.u32(static_cast<std::uint32_t>(m.manifest.size()));
  for (const StageItem& it : m.manifest) {
    w.hash(it.object_id);
    w.u8(static_cast<std::uint8_t>(it.kind));
    w.u64(it.size);
    w.u8(it.source.from_peer ? 1 : 0);
    w.str(it.source.addr);  // manager-sourced items carry an address too
  }
}
void encode_payload(Writer& w, const MaterializeContext& m) {
  w.hash(m.recipe_id);
}
void encode_payload(Writer& w, const Invoke& m) {
  w.u64(m.task_id);
  w.u32(m.attempt);
  w.hash(m.recipe_id);
  w.u64(m.first_item);
  w.u32(m.item_count);
}
void encode_payload(Writer&, const RetireWorker&) {}
void encode_payload(Writer& w, const Joined& m) {
  w.str(m.profile.gpu_model);
  w.f64(m.profile.speed_factor);
  w.u16(m.profile.cores);
  w.u16(m.profile.mem_gb);
  w.u16(m.profile.disk_gb);
  w.u16(m.profile.gpus);
  w.str(m.listen_addr);
}
void encode_payload(Writer& w, const CacheAck& m) { w.hash(m.object_id); }
void encode_payload(Writer& w, const LibraryReady& m) {
  w.hash(m.recipe_id);
  w.u64(m.materialize_ms);
}
void encode_payload(Writer& w, const Result& m) {
  w.u64(m.result.task_id);
  w.u32(m.result.attempt);
  w.u8(m.result.outcome == TaskOutcome::Completed ? 0 : 1);
  w.u64(m.result.inferences_done);
  w.str(m.result.detail);
}
void encode_payload(Writer& w, const TransferDone& m) {
  w.hash(m.object_id);
  w.str(m.peer_addr);
}
void encode_payload(Writer& w, const Fetch& m) { w.hash(m.object_id); }
void encode_payload(Writer& w, const Chunk& m) {
  w.hash(m.object_id);
  w.u64(m.offset);
  w.bytes(m.bytes);
}
void encode_payload(Writer& w, const FetchDenied& m) { w.str(m.reason); }

std::uint8_t tag_of(const Message& msg) {
  struct V {
    std::uint8_t operator()(const StageIn&) { return kTagStageIn; }
    std::uint8_t operator()(const MaterializeContext&) {
      return kTagMaterializeContext;
    }
    std::uint8_t operator()(const Invoke&) { return kTagInvoke; }
    std::uint8_t operator()(const RetireWorker&) { return kTagRetireWorker; }
    std::uint8_t operator()(const Joined&) { return kTagJoined; }
    std::uint8_t operator()(const CacheAck&) { return kTagCacheAck; }
    std::uint8_t operator()(const LibraryReady&) { return kTagLibraryReady; }
    std::uint8_t operator()(const Result&) { return kTagResult; }
    std::uint8_t operator()(const TransferDone&) { return kTagTransferDone; }
    std::uint8_t operator()(const Fetch&) { return kTagFetch; }
    std::uint8_t operator()(const Chunk&) { return kTagChunk; }
    std::uint8_t operator()(const FetchDenied&) { return kTagFetchDenied; }
  };
  return std::visit(V{}, msg);
}

bool decode_payload(Reader& r, std::uint8_t tag, Message& out) {
  switch (tag) {
    case kTagStageIn: {
      StageIn m;
      std::uint32_t count = r.u32();
      // Each manifest item is at least 44 bytes; reject counts the frame
      // cannot possibly hold before reserving anything.
      if (!r.failed && count > (r.size - r.pos) / 44)
        return r.fail("manifest count exceeds frame");
      m.manifest.reserve(count);
      for (std::uint32_t i = 0; i < count && !r.failed; ++i) {
        StageItem it;
        it.object_id = r.hash();
        std::uint8_t kind = r.u8();
        if (!r.failed && kind > 3) return r.fail("bad object kind");
        it.kind = static_cast<ObjectKind>(kind);
        it.size = r.u64();
        std::uint8_t src = r.u8();
        if (!r.failed && src > 1) return r.fail("bad source tag");
        it.source.from_peer = src == 1;
        it.source.addr = r.str();
        m.manifest.push_back(std::move(it));
      }
      out = std::move(m);
      return !r.failed;
    }
    case kTagMaterializeContext: {
      MaterializeContext m;
      m.recipe_id = r.hash();
      out = m;
      return !r.failed;
    }
    case kTagInvoke: {
      Invoke m;
      m.task_id = r.u64();
      m.attempt = r.u32();
      m.recipe_id = r.hash();
      m.first_item = r.u64();
      m.item_count = r.u32();
      out = m;
      return !r.failed;
    }
    case kTagRetireWorker:
      out = RetireWorker{};
      return true;
    case kTagJoined: {
      Joined m;
      m.profile.gpu_model = r.str();
      m.profile.speed_factor = r.f64();
      m.profile.cores = r.u16();
      m.profile.mem_gb = r.u16();
      m.profile.disk_gb = r.u16();
      m.profile.gpus = r.u16();
      m.listen_addr = r.str();
      out = std::move(m);
      return !r.failed;
    }
    case kTagCacheAck: {
      CacheAck m;
      m.object_id = r.hash();
      out = m;
      return !r.failed;
    }
    case kTagLibraryReady: {
      LibraryReady m;
      m.recipe_id = r.hash();
      m.materialize_ms = r.u64();
      out = m;
      return !r.failed;
    }
    case kTagResult: {
      Result m;
      m.result.task_id = r.u64();
      m.result.attempt = r.u32();
      std::uint8_t oc = r.u8();
      if (!r.failed && oc > 1) return r.fail("bad outcome");
      m.result.outcome = oc == 0 ? TaskOutcome::Completed : TaskOutcome::Failed;
      m.result.inferences_done = r.u64();
      m.result.detail = r.str();
      out = std::move(m);
      return !r.failed;
    }
    case kTagTransferDone: {
      TransferDone m;
      m.object_id = r.hash();
      m.peer_addr = r.str();
      out = std::move(m);
      return !r.failed;
    }
    case kTagFetch: {
      Fetch m;
      m.object_id = r.hash();
      out = m;
      return !r.failed;
    }
    case kTagChunk: {
      Chunk m;
      m.object_id = r.hash();
      m.offset = r.u64();
      m.bytes = r.bytes();
      out = std::move(m);
      return !r.failed;
    }
    case kTagFetchDenied: {
      FetchDenied m;
      m.reason = r.str();
      out = std::move(m);
      return !r.failed;
    }
    default:
      r.pos = 4;  // point the error at the tag byte
      return r.fail("unknown tag");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Message& msg) {
  Writer payload;
  std::visit([&](const auto& m) { encode_payload(payload, m); }, msg);
  if (payload.out.size() > std::numeric_limits<std::uint32_t>::max() - 1)
    throw std::length_error("frame payload too large");
  std::uint32_t length = static_cast<std::uint32_t>(payload.out.size()) + 1;
  std::vector<std::uint8_t> frame;
  frame.reserve(4 + length);
  for (int s = 24; s >= 0; s -= 8)
    frame.push_back(static_cast<std::uint8_t>(length >> s));
  frame.push_back(tag_of(msg));
  frame.insert(frame.end(), payload.out.begin(), payload.out.end());
  return frame;
}

DecodeResult decode_frame(const std::uint8_t* data, std::size_t size) {
  DecodeResult res;
  if (size < 4) {
    res.status = DecodeResult::Status::NeedMore;
    res.need_more = 4 - size;
    return res;
  }
  std::uint32_t length = 0;
  for (int i = 0; i < 4; ++i) length = length << 8 | data[i];
  if (length == 0) {
    res.status = DecodeResult::Status::Error;
    res.error_offset = 0;
    res.error_reason = "zero frame length";
    return res;
  }
  std::uint64_t total = 4 + static_cast<std::uint64_t>(length);
  if (size < total) {
    res.status = DecodeResult::Status::NeedMore;
    res.need_more = total - size;
    return res;
  }
  Reader r{data, static_cast<std::size_t>(total), 5, false, 0, {}};
  std::uint8_t tag = data[4];
  Message msg;
  if (!decode_payload(r, tag, msg)) {
    res.status = DecodeResult::Status::Error;
    res.error_offset = r.failed ? r.error_offset : 4;
    res.error_reason = r.failed ? r.error_reason : "unknown tag";
    return res;
  }
  if (r.pos != total) {
    res.status = DecodeResult::Status::Error;
    res.error_offset = r.pos;
    res.error_reason = "trailing bytes in frame";
    return res;
  }
  res.status = DecodeResult::Status::Ok;
  res.msg = std::move(msg);
  res.consumed = static_cast<std::size_t>(total);
  return res;
}

DecodeResult decode_frame(const std::vector<std::uint8_t>& buf) {
  return decode_frame(buf.data(), buf.size());
}

const char* message_tag_name(const Message& msg) {
  struct V {
    const char* operator()(const StageIn&) { return "StageIn"; }
    const char* operator()(const MaterializeContext&) {
      return "MaterializeContext";
    }
    const char* operator()(const Invoke&) { return "Invoke"; }
    const char* operator()(const RetireWorker&) { return "RetireWorker"; }
    const char* operator()(const Joined&) { return "Joined"; }
    const char* operator()(const CacheAck&) { return "CacheAck"; }
    const char* operator()(const LibraryReady&) { return "LibraryReady"; }
    const char* operator()(const Result&) { return "Result"; }
    const char* operator()(const TransferDone&) { return "TransferDone"; }
    const char* operator()(const Fetch&) { return "Fetch"; }
    const char* operator()(const Chunk&) { return "Chunk"; }
    const char* operator()(const FetchDenied&) { return "FetchDenied"; }
  };
  return std::visit(V{}, msg);
}

}  // namespace gleaner
