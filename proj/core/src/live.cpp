#include "gleaner/live.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

#include "gleaner/calibration.hpp"
#include "gleaner/event_log.hpp"
#include "gleaner/protocol.hpp"
#include "gleaner/recipe.hpp"
#include "gleaner/scheduler.hpp"
#include "gleaner/sha256.hpp"
#include "gleaner/worker_runtime.hpp"

namespace gleaner {

WorkloadModel scale_workload_for_live(const WorkloadModel& base) {
  WorkloadModel m = base;
  m.t_inf_ref /= kLiveScale;
  m.t_model_load /= kLiveScale;
  m.t_software_stage /= kLiveScale;
  m.t_model_stage /= kLiveScale;
  m.warm_dispatch_overhead /= kLiveScale;
  // Sizes keep GB units (the store divides by kLiveScale when writing real
  // bytes); the cold penalty is a ratio and does not scale.
  return m;
}

namespace {

namespace fs = std::filesystem;
using SteadyClock = std::chrono::steady_clock;

constexpr double kBytesPerGb = 1e9;

// A staging stuck this long gets re-sent; transfers are loopback-fast, so
// this only fires when a fetch failed for good (source died, denial storm).
constexpr long long kStageStallMs = 5000;

// Set GLEANER_LIVE_TRACE=1 to stream manager/worker progress to stderr.
bool live_trace_enabled() {
  static const bool on = [] {
    const char* v = ::getenv("GLEANER_LIVE_TRACE");
    return v && *v && *v != '0';
  }();
  return on;
}

long long live_trace_ms() {
  static const auto epoch = std::chrono::steady_clock::now();
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - epoch)
      .count();
}

#define LIVE_TRACE(...)                                               \
  do {                                                                \
    if (live_trace_enabled()) {                                       \
      char tbuf_[256];                                                \
      int tn_ = std::snprintf(tbuf_, sizeof tbuf_, "[%d @%5lld] ",    \
                              ::getpid(), live_trace_ms());           \
      tn_ += std::snprintf(tbuf_ + tn_, sizeof tbuf_ - tn_, __VA_ARGS__); \
      if (tn_ < static_cast<int>(sizeof tbuf_) - 1) {                 \
        tbuf_[tn_] = '\n';                                            \
        tbuf_[tn_ + 1] = '\0';                                        \
      }                                                               \
      std::fputs(tbuf_, stderr);                                      \
    }                                                                 \
  } while (0)

// --- socket helpers -------------------------------------------------------

struct Listener {
  int fd = -1;
  std::uint16_t port = 0;
  std::string addr;  // "127.0.0.1:port"
};

Listener make_listener() {
  Listener l;
  l.fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (l.fd < 0) throw std::runtime_error("socket() failed");
  int one = 1;
  ::setsockopt(l.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  sa.sin_port = 0;
  if (::bind(l.fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 ||
      ::listen(l.fd, 128) != 0) {
    ::close(l.fd);
    throw std::runtime_error("bind/listen failed");
  }
  socklen_t len = sizeof sa;
  ::getsockname(l.fd, reinterpret_cast<sockaddr*>(&sa), &len);
  l.port = ntohs(sa.sin_port);
  char buf[32];
  std::snprintf(buf, sizeof buf, "127.0.0.1:%u", unsigned{l.port});
  l.addr = buf;
  return l;
}

// Dials "127.0.0.1:port" with brief retries; listen() already queues the
// handshake, so retries only cover transient resource errors.
int dial(const std::string& addr, int budget_ms) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) return -1;
  int port = std::atoi(addr.c_str() + colon + 1);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  sa.sin_port = htons(static_cast<std::uint16_t>(port));
  auto deadline = SteadyClock::now() + std::chrono::milliseconds(budget_ms);
  while (true) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd >= 0 &&
        ::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0)
      return fd;
    if (fd >= 0) ::close(fd);
    if (SteadyClock::now() >= deadline) return -1;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

bool send_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

bool send_msg(int fd, const Message& msg) {
  std::vector<std::uint8_t> frame = encode_frame(msg);
  return send_all(fd, frame.data(), frame.size());
}

bool read_exact(int fd, std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    ssize_t r = ::recv(fd, p, n, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (r == 0) return false;  // EOF
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

// Blocking read of one whole frame.  nullopt on EOF, error, or garbage.
std::optional<Message> read_frame(int fd) {
  std::uint8_t head[4];
  if (!read_exact(fd, head, 4)) return std::nullopt;
  std::uint64_t len = (std::uint64_t{head[0]} << 24) |
                      (std::uint64_t{head[1]} << 16) |
                      (std::uint64_t{head[2]} << 8) | head[3];
  if (len == 0 || len > (std::uint64_t{64} << 20)) return std::nullopt;
  std::vector<std::uint8_t> buf(4 + len);
  std::memcpy(buf.data(), head, 4);
  if (!read_exact(fd, buf.data() + 4, len)) return std::nullopt;
  DecodeResult r = decode_frame(buf);
  if (r.status != DecodeResult::Status::Ok) return std::nullopt;
  return r.msg;
}

void set_nonblocking(int fd) {
  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

// --- object store / context ----------------------------------------------

struct LiveObject {
  Hash256 id;
  ObjectKind kind = ObjectKind::ContextInput;
  std::vector<std::uint8_t> data;
};

struct LiveContext {
  Hash256 recipe_id;
  std::vector<LiveObject> objects;  // code, package, context code, model
  std::vector<Hash256> object_ids;
};

std::vector<std::uint8_t> pseudo_random_bytes(std::uint64_t seed,
                                              std::size_t n) {
  std::vector<std::uint8_t> out(n);
  std::mt19937_64 rng(seed);
  std::size_t i = 0;
  while (i + 8 <= n) {
    std::uint64_t v = rng();
    std::memcpy(out.data() + i, &v, 8);
    i += 8;
  }
  if (i < n) {
    std::uint64_t v = rng();
    std::memcpy(out.data() + i, &v, n - i);
  }
  return out;
}

// Real bytes for all four recipe elements, sized by workload GB / kLiveScale.
LiveContext build_live_context(const WorkloadModel& m) {
  auto scaled = [](double gb) {
    return static_cast<std::size_t>(
        std::llround(gb * kBytesPerGb / kLiveScale));
  };
  LiveContext ctx;
  ContextRecipe recipe;
  recipe.function_code.data.assign(64, 0xF1);
  recipe.context_code.data.assign(64, 0xC7);
  recipe.dependency_package.data =
      pseudo_random_bytes(0x9A11AD, scaled(m.package_size));
  NamedBlob model;
  model.name = "model";
  model.blob.data = pseudo_random_bytes(0x30DE1, scaled(m.model_size));
  recipe.context_inputs.push_back(model);
  ctx.recipe_id = compute_recipe_id(recipe);

  auto add = [&](std::vector<std::uint8_t> data, ObjectKind kind) {
    LiveObject obj;
    obj.kind = kind;
    obj.id = sha256(data);
    obj.data = std::move(data);
    ctx.object_ids.push_back(obj.id);
    ctx.objects.push_back(std::move(obj));
  };
  add(recipe.function_code.data, ObjectKind::FunctionCode);
  add(recipe.dependency_package.data, ObjectKind::DependencyPackage);
  add(recipe.context_code.data, ObjectKind::ContextCode);
  add(model.blob.data, ObjectKind::ContextInput);
  return ctx;
}

void write_store(const fs::path& dir, const LiveContext& ctx) {
  fs::create_directories(dir);
  for (const LiveObject& obj : ctx.objects) {
    std::ofstream out(dir / obj.id.hex(), std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(obj.data.data()),
              static_cast<std::streamsize>(obj.data.size()));
  }
}

// --- peer/manager fetch service -------------------------------------------

// Shared by manager and workers; held via shared_ptr so serve threads can
// safely outlive the scope that accepted the connection.
struct ServeShared {
  fs::path dir;
  std::atomic<int> active{0};
  int cap = 3;
};

void serve_fetch(int fd, const std::shared_ptr<ServeShared>& shared) {
  timeval tv{5, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  std::optional<Message> msg = read_frame(fd);
  if (!msg || !std::holds_alternative<Fetch>(*msg)) {
    LIVE_TRACE("serve_fetch: bad first frame");
    ::close(fd);
    return;
  }
  const Hash256 id = std::get<Fetch>(*msg).object_id;
  LIVE_TRACE("serve_fetch: %s", id.hex().substr(0, 8).c_str());
  std::ifstream in(shared->dir / id.hex(), std::ios::binary);
  if (!in) {
    LIVE_TRACE("serve_fetch deny absent %s", id.hex().substr(0, 8).c_str());
    send_msg(fd, FetchDenied{"absent"});
    ::close(fd);
    return;
  }
  // The slot count races with stream teardown (a receiver can drain the last
  // chunk and dial its next fetch before the serving thread releases its
  // slot), so wait briefly for a slot before denying.
  bool admitted = false;
  auto patience = SteadyClock::now() + std::chrono::seconds(1);
  while (true) {
    if (shared->active.fetch_add(1) < shared->cap) {
      admitted = true;
      break;
    }
    shared->active.fetch_sub(1);
    if (SteadyClock::now() >= patience) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (!admitted) {
    LIVE_TRACE("serve_fetch deny at-cap %s", id.hex().substr(0, 8).c_str());
    send_msg(fd, FetchDenied{"at-cap"});
    ::close(fd);
    return;
  }
  Chunk chunk;
  chunk.object_id = id;
  chunk.bytes.resize(kChunkSize);
  std::uint64_t offset = 0;
  while (in) {
    in.read(reinterpret_cast<char*>(chunk.bytes.data()), kChunkSize);
    std::streamsize got = in.gcount();
    if (got <= 0) break;
    chunk.offset = offset;
    chunk.bytes.resize(static_cast<std::size_t>(got));
    if (!send_msg(fd, chunk)) break;  // receiver vanished
    offset += static_cast<std::uint64_t>(got);
    chunk.bytes.resize(kChunkSize);
  }
  shared->active.fetch_sub(1);
  ::close(fd);
}

// --- worker process --------------------------------------------------------

struct WorkerParams {
  std::string manager_addr;
  int listen_fd = -1;
  std::string listen_addr;
  fs::path cache_dir;
  ContextMode mode = ContextMode::Pervasive;
  WorkloadModel live_m;
  std::uint32_t transfer_cap = 3;
};

// Denied means the source refused the request (worth a short retry); Failed
// means the source is unreachable or the stream broke (wait for a re-stage).
enum class FetchOutcome : std::uint8_t { Ok, Denied, Failed };

// Fetches one object from its source into the cache directory, verifying the
// content hash (the file name IS the hash).  On failure the partial file is
// removed; the caller retries or waits for the manager to re-stage.
FetchOutcome fetch_object(const StageItem& item, const fs::path& cache_dir) {
  if (item.source.addr.empty()) return FetchOutcome::Failed;
  int fd = dial(item.source.addr, 2000);
  if (fd < 0) {
    LIVE_TRACE("fetch: dial %s failed", item.source.addr.c_str());
    return FetchOutcome::Failed;
  }
  if (!send_msg(fd, Fetch{item.object_id})) {
    LIVE_TRACE("fetch: send Fetch failed (errno=%d)", errno);
    ::close(fd);
    return FetchOutcome::Failed;
  }
  timeval tv{10, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  fs::path final_path = cache_dir / item.object_id.hex();
  fs::path part_path = final_path;
  part_path += ".part";
  std::ofstream out(part_path, std::ios::binary | std::ios::trunc);
  Sha256 hasher;
  std::uint64_t received = 0;
  FetchOutcome outcome = FetchOutcome::Ok;
  while (received < item.size) {
    std::optional<Message> msg = read_frame(fd);
    if (!msg) {
      LIVE_TRACE("fetch: stream ended at %llu/%llu (errno=%d)",
                 static_cast<unsigned long long>(received),
                 static_cast<unsigned long long>(item.size), errno);
      outcome = FetchOutcome::Failed;
      break;
    }
    const Chunk* chunk = std::get_if<Chunk>(&*msg);
    if (!chunk || chunk->object_id != item.object_id ||
        chunk->offset != received) {
      if (const FetchDenied* denied = std::get_if<FetchDenied>(&*msg)) {
        LIVE_TRACE("fetch: denied (%s)", denied->reason.c_str());
        outcome = FetchOutcome::Denied;
      } else {
        LIVE_TRACE("fetch: unexpected frame");
        outcome = FetchOutcome::Failed;  // stray message or stream corruption
      }
      break;
    }
    out.write(reinterpret_cast<const char*>(chunk->bytes.data()),
              static_cast<std::streamsize>(chunk->bytes.size()));
    hasher.update(chunk->bytes);
    received += chunk->bytes.size();
  }
  ::close(fd);
  out.close();
  if (outcome == FetchOutcome::Ok &&
      (received != item.size || hasher.finish() != item.object_id))
    outcome = FetchOutcome::Failed;  // short or corrupt stream
  if (outcome == FetchOutcome::Ok) {
    std::error_code ec;
    fs::rename(part_path, final_path, ec);
    return ec ? FetchOutcome::Failed : FetchOutcome::Ok;
  }
  std::error_code ec;
  fs::remove(part_path, ec);
  return outcome;
}

[[noreturn]] void run_live_worker(const WorkerParams& p) {
  fs::create_directories(p.cache_dir);
  auto shared = std::make_shared<ServeShared>();
  shared->dir = p.cache_dir;
  shared->cap = static_cast<int>(p.transfer_cap);
  int listen_fd = p.listen_fd;
  // Peer-fetch service; detached threads die with the process on _exit.
  std::thread([listen_fd, shared] {
    while (true) {
      int conn = ::accept(listen_fd, nullptr, nullptr);
      if (conn < 0) {
        if (errno == EINTR) continue;
        return;
      }
      std::thread([conn, shared] { serve_fetch(conn, shared); }).detach();
    }
  }).detach();

  int control = dial(p.manager_addr, 5000);
  if (control < 0) ::_exit(2);

  WorkerProfile profile;
  profile.gpu_model = "live";
  profile.speed_factor = 1.0;
  Joined joined;
  joined.profile = profile;
  joined.listen_addr = p.listen_addr;
  if (!send_msg(control, joined)) ::_exit(2);

  WorkerState rt;
  rt.profile = profile;
  rt.cache_capacity = static_cast<std::uint64_t>(profile.disk_gb *
                                                 kBytesPerGb / kLiveScale);
  rt.transfer_cap = p.transfer_cap;
  std::vector<Hash256> recipe_objects;

  while (true) {
    std::optional<Message> msg = read_frame(control);
    if (!msg) ::_exit(0);  // manager gone: vanish, no cleanup
    LIVE_TRACE("worker got message index %zu", msg->index());

    if (const StageIn* stage = std::get_if<StageIn>(&*msg)) {
      recipe_objects.clear();
      for (const StageItem& item : stage->manifest)
        recipe_objects.push_back(item.object_id);
      StageBegin begin = stage_begin(rt, stage->manifest);
      if (!begin.ok) ::_exit(3);  // capacity is sized to always fit
      for (const StageItem& item : stage->manifest) {
        auto entry = rt.cache.find(item.object_id);
        if (entry != rt.cache.end() &&
            entry->second.state == ObjectState::Present) {
          send_msg(control, CacheAck{item.object_id});
          continue;
        }
        // Absent, or left Transferring by an aborted stage: (re)fetch.
        // Denials are transient (source momentarily saturated), so retry
        // briefly; anything else waits for the manager to re-stage.
        FetchOutcome out = FetchOutcome::Failed;
        for (int tries = 0; tries < 8; ++tries) {
          out = fetch_object(item, p.cache_dir);
          if (out != FetchOutcome::Denied) break;
          std::this_thread::sleep_for(std::chrono::milliseconds(25));
        }
        LIVE_TRACE("worker fetch %s from %s -> %d",
                   item.object_id.hex().substr(0, 8).c_str(),
                   item.source.addr.c_str(), out == FetchOutcome::Ok ? 1 : 0);
        if (out != FetchOutcome::Ok) break;  // wait for a re-stage
        stage_object_done(rt, item.object_id);
        send_msg(control, CacheAck{item.object_id});
        if (item.source.from_peer)
          send_msg(control, TransferDone{item.object_id, item.source.addr});
      }
    } else if (const MaterializeContext* mat =
                   std::get_if<MaterializeContext>(&*msg)) {
      EnsureOutcome outcome =
          ensure_library_begin(rt, mat->recipe_id, recipe_objects);
      if (outcome == EnsureOutcome::MissingObjects) ::_exit(4);
      EngineMs dur = 0;
      if (outcome == EnsureOutcome::Materializing) {
        dur = materialize_duration_ms(p.live_m);
        std::this_thread::sleep_for(std::chrono::milliseconds(dur));
        ensure_library_done(rt, mat->recipe_id);
      }
      send_msg(control,
               LibraryReady{mat->recipe_id, static_cast<std::uint64_t>(dur)});
    } else if (const Invoke* inv = std::get_if<Invoke>(&*msg)) {
      invocation_begin(rt, inv->task_id, inv->attempt);
      bool cold = p.mode != ContextMode::Pervasive;
      EngineMs dur = invocation_duration_ms(p.live_m, profile.speed_factor,
                                            inv->item_count, cold);
      std::this_thread::sleep_for(std::chrono::milliseconds(dur));
      invocation_end(rt);
      InvocationResult res;
      res.task_id = inv->task_id;
      res.attempt = inv->attempt;
      res.outcome = TaskOutcome::Completed;
      res.inferences_done = inv->item_count;
      send_msg(control, Result{res});
    } else if (std::holds_alternative<RetireWorker>(*msg)) {
      ::_exit(0);
    }
    // Anything else from the manager is ignored.
  }
}

// --- live manager ----------------------------------------------------------

struct ControlConn {
  int fd = -1;
  std::vector<std::uint8_t> buf;
  bool joined = false;
  WorkerId id = 0;
};

class LiveManager {
 public:
  explicit LiveManager(const LiveSmokeOptions& opt) : opt_(opt) {}

  LiveSmokeReport run();

 private:
  EngineMs now_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               SteadyClock::now() - t0_)
        .count();
  }
  void note(const std::string& line) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "[%6lld ms] ",
                  static_cast<long long>(now_ms()));
    report_.log.push_back(std::string(buf) + line);
  }
  void log_kind(EventKind kind, WorkerId worker, std::uint64_t aux1 = 0,
                std::uint64_t aux2 = 0) {
    EventRecord rec;
    rec.time = now_ms();
    rec.kind = kind;
    rec.worker = worker;
    rec.aux1 = aux1;
    rec.aux2 = aux2;
    log_.append(rec);
  }

  void setup_dirs();
  void spawn_workers();
  void event_loop();
  void teardown();
  void finalize_report();

  void promote_pending(std::size_t index, const Joined& joined);
  // Reads whatever is available and handles complete frames; false means the
  // worker hung up or sent garbage (caller evicts).
  bool pump_conn(WorkerId id);
  bool drain_frames(WorkerId id);
  void handle_worker_message(WorkerId id, const Message& msg);
  void handle_cache_ack(WorkerId id, const CacheAck& ack);
  void handle_library_ready(WorkerId id, const LibraryReady& lr);
  void handle_result(WorkerId id, const Result& res);
  void handle_evict(WorkerId id);

  void do_match();
  void try_serve_stages();
  void send_invoke(WorkerId id, TaskId task, std::uint32_t attempt);
  void send_materialize(WorkerId id);
  void after_stage(WorkerId id);
  void finish_run();
  void maybe_kill(WorkerId reporter);
  void check_stall();
  void restage_stalled();

  bool send_to_worker(WorkerId id, const Message& msg);

  const LiveSmokeOptions& opt_;
  LiveSmokeReport report_;
  SteadyClock::time_point t0_;

  fs::path root_;
  bool root_generated_ = false;
  fs::path store_dir_;
  WorkloadModel live_m_;
  LiveContext ctx_;
  std::map<Hash256, std::vector<Hash256>> recipe_objects_by_id_;

  Listener control_l_;
  Listener fetch_l_;
  std::shared_ptr<ServeShared> serve_shared_;
  std::vector<std::thread> serve_threads_;  // joined at teardown

  std::vector<Listener> worker_listeners_;
  std::vector<pid_t> pids_;
  std::vector<bool> reaped_;
  std::size_t reaped_count_ = 0;
  std::unordered_map<std::uint16_t, std::size_t> port_to_index_;
  std::unordered_map<WorkerId, std::size_t> id_to_index_;

  ManagerState mgr_;
  EventLog log_;
  std::uint64_t next_id_ = 0;
  std::map<WorkerId, ControlConn> conns_;  // joined workers only
  std::vector<ControlConn> pending_;       // accepted, awaiting Joined

  std::size_t join_threshold_ = 0;
  bool eligible_ = false;
  bool finished_ = false;

  struct StagingSource {
    bool from_manager = true;
    WorkerId source = 0;
    SteadyClock::time_point started;
  };

  std::deque<WorkerId> stage_waiting_;
  // receiver -> where its stage streams from; releases a slot on completion.
  std::map<WorkerId, StagingSource> staging_source_;
  std::uint32_t mgr_active_ = 0;

  std::map<WorkerId, std::uint64_t> mats_per_worker_;
  bool kill_requeue_expected_ = false;
};

void LiveManager::setup_dirs() {
  if (!opt_.work_dir.empty()) {
    root_ = opt_.work_dir;
    fs::create_directories(root_);
  } else {
    const char* tmp = ::getenv("TMPDIR");
    std::string tmpl = std::string(tmp && *tmp ? tmp : "/tmp");
    tmpl += "/gleaner-live.XXXXXX";
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!::mkdtemp(buf.data()))
      throw std::runtime_error("mkdtemp failed for live work dir");
    root_ = buf.data();
    root_generated_ = true;
  }
  store_dir_ = root_ / "store";
  write_store(store_dir_, ctx_);
}

void LiveManager::spawn_workers() {
  worker_listeners_.reserve(opt_.workers);
  for (std::uint32_t i = 0; i < opt_.workers; ++i) {
    worker_listeners_.push_back(make_listener());
    port_to_index_[worker_listeners_.back().port] = i;
  }
  std::fflush(stdout);
  std::fflush(stderr);
  for (std::uint32_t i = 0; i < opt_.workers; ++i) {
    pid_t pid = ::fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
      // Child: keep only its own listener; drop every other inherited socket.
      ::close(control_l_.fd);
      ::close(fetch_l_.fd);
      for (std::uint32_t j = 0; j < opt_.workers; ++j)
        if (j != i && worker_listeners_[j].fd >= 0)
          ::close(worker_listeners_[j].fd);
      WorkerParams params;
      params.manager_addr = control_l_.addr;
      params.listen_fd = worker_listeners_[i].fd;
      params.listen_addr = worker_listeners_[i].addr;
      params.cache_dir = root_ / ("worker_" + std::to_string(i));
      params.mode = opt_.mode;
      params.live_m = live_m_;
      params.transfer_cap = opt_.transfer_cap;
      run_live_worker(params);  // never returns
    }
    pids_.push_back(pid);
    reaped_.push_back(false);
    ::close(worker_listeners_[i].fd);
    worker_listeners_[i].fd = -1;
  }
}

bool LiveManager::send_to_worker(WorkerId id, const Message& msg) {
  auto it = conns_.find(id);
  if (it == conns_.end()) return false;
  // Send failures mean the worker died; poll reports the hangup and the
  // eviction path requeues its task, so failures are ignored here.
  return send_msg(it->second.fd, msg);
}

void LiveManager::send_invoke(WorkerId id, TaskId task, std::uint32_t attempt) {
  const TaskSpec& spec = mgr_.specs.at(task);
  Invoke inv;
  inv.task_id = task;
  inv.attempt = attempt;
  inv.recipe_id = ctx_.recipe_id;
  inv.first_item = task * opt_.batch;
  inv.item_count = spec.batch_size;
  send_to_worker(id, inv);
}

void LiveManager::send_materialize(WorkerId id) {
  auto view_it = mgr_.worker_table.find(id);
  if (view_it == mgr_.worker_table.end()) return;
  WorkerView& view = view_it->second;
  if (view.ready_libraries.count(ctx_.recipe_id)) {
    if (auto task = view.running_task)
      send_invoke(id, *task, mgr_.attempts.at(*task));
    return;
  }
  if (view.materializing.count(ctx_.recipe_id)) return;  // already in flight
  view.materializing.insert(ctx_.recipe_id);
  log_kind(EventKind::MaterializeStarted, id);
  send_to_worker(id, MaterializeContext{ctx_.recipe_id});
}

void LiveManager::after_stage(WorkerId id) {
  if (opt_.mode == ContextMode::Pervasive) {
    send_materialize(id);
    return;
  }
  auto view_it = mgr_.worker_table.find(id);
  if (view_it == mgr_.worker_table.end()) return;
  if (auto task = view_it->second.running_task)
    send_invoke(id, *task, mgr_.attempts.at(*task));
}

void LiveManager::do_match() {
  if (!eligible_ || finished_) return;
  auto decisions = match_tasks(mgr_, log_, now_ms(), recipe_objects_by_id_);
  LIVE_TRACE("do_match: %zu decisions (queue=%zu)", decisions.size(),
             mgr_.ready_queue.size());
  for (const DispatchDecision& d : decisions) {
    switch (d.path) {
      case DispatchPath::LibraryReady:
        send_invoke(d.worker_id, d.task_id, d.attempt);
        break;
      case DispatchPath::CachedOnly:
        after_stage(d.worker_id);
        break;
      case DispatchPath::Cold:
        stage_waiting_.push_back(d.worker_id);
        break;
    }
  }
  if (!decisions.empty()) try_serve_stages();
}

void LiveManager::try_serve_stages() {
  while (true) {
    while (!stage_waiting_.empty() && !conns_.count(stage_waiting_.front()))
      stage_waiting_.pop_front();
    if (stage_waiting_.empty()) return;

    // Source preference mirrors the simulator: earliest-staged live holder
    // with a free outbound slot, then the manager if below cap.
    const WorkerView* source = nullptr;
    WorkerId source_id = 0;
    for (const auto& [id, view] : mgr_.worker_table) {
      if (!conns_.count(id) || view.staged_at < 0) continue;
      if (view.active_transfers >= opt_.transfer_cap) continue;
      bool has_all = true;
      for (const Hash256& obj : ctx_.object_ids)
        if (!view.cached_objects.count(obj)) {
          has_all = false;
          break;
        }
      if (!has_all) continue;
      if (!source || view.staged_at < source->staged_at ||
          (view.staged_at == source->staged_at && id < source_id)) {
        source = &view;
        source_id = id;
      }
    }
    bool from_manager = source == nullptr;
    if (from_manager && mgr_active_ >= opt_.transfer_cap) return;

    WorkerId receiver = stage_waiting_.front();
    stage_waiting_.pop_front();

    StageIn stage;
    std::uint64_t total = 0;
    for (const LiveObject& obj : ctx_.objects) {
      StageItem item;
      item.object_id = obj.id;
      item.kind = obj.kind;
      item.size = obj.data.size();
      item.source.from_peer = !from_manager;
      item.source.addr = from_manager ? fetch_l_.addr : source->addr;
      total += item.size;
      stage.manifest.push_back(item);
    }

    mgr_.worker_table.at(receiver).staging = true;
    if (from_manager) {
      ++mgr_active_;
      staging_source_[receiver] = {true, 0, SteadyClock::now()};
    } else {
      ++mgr_.worker_table.at(source_id).active_transfers;
      staging_source_[receiver] = {false, source_id, SteadyClock::now()};
      log_kind(EventKind::TransferStarted, source_id, 0, receiver);
    }
    log_kind(EventKind::StageInStarted, receiver, total,
             from_manager ? kManagerActor : source_id);
    bool sent = send_to_worker(receiver, stage);
    LIVE_TRACE("stage-in -> worker %llu from %s (sent=%d)",
               static_cast<unsigned long long>(receiver),
               from_manager ? "manager" : "peer", sent ? 1 : 0);
  }
}

void LiveManager::promote_pending(std::size_t index, const Joined& joined) {
  WorkerId id = next_id_++;
  ControlConn conn = std::move(pending_[index]);
  conn.joined = true;
  conn.id = id;
  conns_.emplace(id, std::move(conn));

  worker_joined(mgr_, log_, now_ms(), id, joined.profile, joined.listen_addr);
  mats_per_worker_[id] = 0;
  auto colon = joined.listen_addr.rfind(':');
  if (colon != std::string::npos) {
    auto port = static_cast<std::uint16_t>(
        std::atoi(joined.listen_addr.c_str() + colon + 1));
    auto idx = port_to_index_.find(port);
    if (idx != port_to_index_.end()) id_to_index_[id] = idx->second;
  }
  ++report_.workers_joined;
  note("worker " + std::to_string(id) + " joined (" +
       std::to_string(report_.workers_joined) + "/" +
       std::to_string(opt_.workers) + ")");
  if (!eligible_ && report_.workers_joined >= join_threshold_) {
    eligible_ = true;
    log_kind(EventKind::DispatchEligible, kManagerActor,
             report_.workers_joined);
    note("dispatch eligible");
  }
  do_match();
  drain_frames(id);  // frames the worker pipelined behind Joined
}

void LiveManager::handle_cache_ack(WorkerId id, const CacheAck& ack) {
  auto view_it = mgr_.worker_table.find(id);
  if (view_it == mgr_.worker_table.end()) return;
  WorkerView& view = view_it->second;
  view.cached_objects.insert(ack.object_id);
  if (!view.staging) return;
  for (const Hash256& obj : ctx_.object_ids)
    if (!view.cached_objects.count(obj)) return;

  view.staging = false;
  view.staged_at = now_ms();
  bool from_manager = true;
  WorkerId source_id = 0;
  auto src = staging_source_.find(id);
  if (src != staging_source_.end()) {
    from_manager = src->second.from_manager;
    source_id = src->second.source;
    if (from_manager) {
      --mgr_active_;
    } else {
      auto sv = mgr_.worker_table.find(source_id);
      if (sv != mgr_.worker_table.end() && sv->second.active_transfers > 0)
        --sv->second.active_transfers;
      log_kind(EventKind::TransferFinished, source_id, 0, id);
    }
    staging_source_.erase(src);
  }
  log_kind(EventKind::StageInFinished, id, from_manager ? 0 : 1,
           from_manager ? kManagerActor : source_id);
  note("worker " + std::to_string(id) + " staged from " +
       (from_manager ? std::string("manager")
                     : "worker " + std::to_string(source_id)));
  try_serve_stages();
  after_stage(id);
}

void LiveManager::handle_library_ready(WorkerId id, const LibraryReady& lr) {
  auto view_it = mgr_.worker_table.find(id);
  if (view_it == mgr_.worker_table.end()) return;
  WorkerView& view = view_it->second;
  view.materializing.erase(lr.recipe_id);
  view.ready_libraries.insert(lr.recipe_id);
  ++mats_per_worker_[id];
  ++report_.materializations_total;
  log_kind(EventKind::MaterializeFinished, id, lr.materialize_ms);
  note("library ready on worker " + std::to_string(id) + " (" +
       std::to_string(lr.materialize_ms) + " ms load)");
  if (auto task = view.running_task) {
    send_invoke(id, *task, mgr_.attempts.at(*task));
  } else {
    do_match();
  }
}

void LiveManager::handle_result(WorkerId id, const Result& res) {
  ResultDisposition disp = on_result(mgr_, log_, now_ms(), res.result);
  if (disp == ResultDisposition::StaleDiscarded) {
    ++report_.duplicate_results;
    return;
  }
  if (disp != ResultDisposition::Accepted) return;
  report_.tasks_completed = static_cast<std::uint32_t>(mgr_.results.size());
  if (report_.tasks_completed % 25 == 0 ||
      report_.tasks_completed == opt_.tasks)
    note("completed " + std::to_string(report_.tasks_completed) + "/" +
         std::to_string(opt_.tasks));
  if (report_.tasks_completed >= opt_.tasks) {
    finish_run();
    return;
  }
  do_match();
  maybe_kill(id);
}

void LiveManager::maybe_kill(WorkerId reporter) {
  if (!opt_.kill_one || report_.killed_worker >= 0) return;
  if (report_.tasks_completed < (opt_.tasks + 1) / 2) return;
  auto idx = id_to_index_.find(reporter);
  if (idx == id_to_index_.end() || reaped_[idx->second]) return;
  kill_requeue_expected_ =
      mgr_.worker_table.at(reporter).running_task.has_value();
  ::kill(pids_[idx->second], SIGKILL);
  report_.killed_worker = static_cast<std::int64_t>(reporter);
  note("killed worker " + std::to_string(reporter) + " (pid " +
       std::to_string(pids_[idx->second]) + ") at " +
       std::to_string(report_.tasks_completed) + "/" +
       std::to_string(opt_.tasks) +
       (kill_requeue_expected_ ? ", task in flight" : ", idle"));
}

void LiveManager::handle_evict(WorkerId id) {
  auto conn = conns_.find(id);
  if (conn != conns_.end()) {
    ::close(conn->second.fd);
    conns_.erase(conn);
  }
  // Release the slot of a stage it was receiving.
  auto src = staging_source_.find(id);
  if (src != staging_source_.end()) {
    if (src->second.from_manager) {
      --mgr_active_;
    } else {
      auto sv = mgr_.worker_table.find(src->second.source);
      if (sv != mgr_.worker_table.end() && sv->second.active_transfers > 0)
        --sv->second.active_transfers;
    }
    staging_source_.erase(src);
  }
  stage_waiting_.erase(
      std::remove(stage_waiting_.begin(), stage_waiting_.end(), id),
      stage_waiting_.end());
  // Receivers it was sourcing get a fresh manifest from a surviving holder.
  std::vector<WorkerId> orphaned;
  for (auto it = staging_source_.begin(); it != staging_source_.end();) {
    if (!it->second.from_manager && it->second.source == id) {
      orphaned.push_back(it->first);
      it = staging_source_.erase(it);
    } else {
      ++it;
    }
  }
  std::sort(orphaned.begin(), orphaned.end());
  for (auto rit = orphaned.rbegin(); rit != orphaned.rend(); ++rit) {
    auto view = mgr_.worker_table.find(*rit);
    if (view != mgr_.worker_table.end()) view->second.staging = false;
    stage_waiting_.push_front(*rit);
  }

  std::optional<TaskId> requeued = on_worker_evicted(mgr_, log_, now_ms(), id);
  if (requeued) {
    ++report_.requeues;
    note("worker " + std::to_string(id) + " gone; requeued task " +
         std::to_string(*requeued));
  } else {
    note("worker " + std::to_string(id) + " gone (idle)");
  }
  try_serve_stages();
  do_match();
}

void LiveManager::handle_worker_message(WorkerId id, const Message& msg) {
  if (const CacheAck* ack = std::get_if<CacheAck>(&msg)) {
    handle_cache_ack(id, *ack);
  } else if (const LibraryReady* lr = std::get_if<LibraryReady>(&msg)) {
    handle_library_ready(id, *lr);
  } else if (const Result* res = std::get_if<Result>(&msg)) {
    handle_result(id, *res);
  } else if (std::holds_alternative<TransferDone>(msg)) {
    // Receiver-side notice; manager state is driven by CacheAck.
  } else {
    log_kind(EventKind::ProtocolError, id, 4);  // unexpected worker message
  }
}

bool LiveManager::drain_frames(WorkerId id) {
  while (!finished_) {
    auto it = conns_.find(id);
    if (it == conns_.end()) return true;  // evicted while handling
    DecodeResult dr = decode_frame(it->second.buf);
    if (dr.status == DecodeResult::Status::NeedMore) return true;
    if (dr.status == DecodeResult::Status::Error) return false;
    Message msg = dr.msg;
    it->second.buf.erase(
        it->second.buf.begin(),
        it->second.buf.begin() + static_cast<std::ptrdiff_t>(dr.consumed));
    handle_worker_message(id, msg);
  }
  return true;
}

bool LiveManager::pump_conn(WorkerId id) {
  auto it = conns_.find(id);
  if (it == conns_.end()) return true;
  ControlConn& conn = it->second;
  std::uint8_t tmp[65536];
  bool dead = false;
  while (true) {
    ssize_t r = ::recv(conn.fd, tmp, sizeof tmp, 0);
    if (r > 0) {
      conn.buf.insert(conn.buf.end(), tmp, tmp + r);
      continue;
    }
    if (r < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) break;
    if (r < 0 && errno == EINTR) continue;
    dead = true;  // EOF or hard error
    break;
  }
  if (!drain_frames(id)) dead = true;
  return !dead;
}

void LiveManager::finish_run() {
  finished_ = true;
  EventRecord rec;
  rec.time = now_ms();
  rec.kind = EventKind::RunCompleted;
  rec.aux1 = opt_.tasks;
  log_.append(rec);
  note("all " + std::to_string(opt_.tasks) + " tasks completed");
  for (auto& [id, conn] : conns_) send_msg(conn.fd, RetireWorker{});
}

void LiveManager::check_stall() {
  if (finished_ || report_.stalled) return;
  if (!conns_.empty() || !pending_.empty()) return;
  if (reaped_count_ < pids_.size()) return;
  report_.stalled = true;
  std::uint64_t outstanding = opt_.tasks - mgr_.results.size();
  log_kind(EventKind::RunStalled, kManagerActor, outstanding);
  report_.failure = "stalled: " + std::to_string(outstanding) +
                    " tasks outstanding with no workers";
  note(report_.failure);
}

// A staging stuck past the deadline is re-sent: the receiver re-acks what it
// already holds and refetches the rest, so a repeat manifest is harmless.
void LiveManager::restage_stalled() {
  if (finished_) return;
  auto now = SteadyClock::now();
  std::vector<WorkerId> stalled;
  for (const auto& [id, src] : staging_source_)
    if (now - src.started >= std::chrono::milliseconds(kStageStallMs))
      stalled.push_back(id);
  for (WorkerId id : stalled) {
    auto src = staging_source_.find(id);
    if (src == staging_source_.end()) continue;
    if (src->second.from_manager) {
      --mgr_active_;
    } else {
      auto sv = mgr_.worker_table.find(src->second.source);
      if (sv != mgr_.worker_table.end() && sv->second.active_transfers > 0)
        --sv->second.active_transfers;
    }
    staging_source_.erase(src);
    auto view = mgr_.worker_table.find(id);
    if (view != mgr_.worker_table.end()) view->second.staging = false;
    stage_waiting_.push_front(id);
    note("re-staging worker " + std::to_string(id) + " (stalled)");
  }
  if (!stalled.empty()) try_serve_stages();
}

void LiveManager::event_loop() {
  auto deadline = t0_ + std::chrono::milliseconds(opt_.timeout_ms);
  while (!finished_ && !report_.stalled) {
    // Reap dead children; worker death is observed via socket hangup.
    while (true) {
      int status = 0;
      pid_t pid = ::waitpid(-1, &status, WNOHANG);
      if (pid <= 0) break;
      for (std::size_t i = 0; i < pids_.size(); ++i)
        if (pids_[i] == pid && !reaped_[i]) {
          reaped_[i] = true;
          ++reaped_count_;
        }
    }
    check_stall();
    if (report_.stalled) break;
    if (SteadyClock::now() >= deadline) {
      report_.failure = "timeout after " + std::to_string(opt_.timeout_ms) +
                        " ms; " + std::to_string(report_.tasks_completed) +
                        "/" + std::to_string(opt_.tasks) + " tasks completed";
      note(report_.failure);
      break;
    }
    restage_stalled();

    const std::size_t n_pending = pending_.size();
    std::vector<WorkerId> order;
    order.reserve(conns_.size());
    std::vector<pollfd> fds;
    fds.reserve(2 + n_pending + conns_.size());
    fds.push_back({control_l_.fd, POLLIN, 0});
    fds.push_back({fetch_l_.fd, POLLIN, 0});
    for (const ControlConn& conn : pending_)
      fds.push_back({conn.fd, POLLIN, 0});
    for (const auto& [id, conn] : conns_) {
      fds.push_back({conn.fd, POLLIN, 0});
      order.push_back(id);
    }
    int n = ::poll(fds.data(), static_cast<nfds_t>(fds.size()), 20);
    if (n < 0) {
      if (errno == EINTR) continue;
      report_.failure = "poll failed";
      break;
    }
    if (n == 0) continue;

    // Pending connections first: promote on Joined, drop on close/garbage.
    std::vector<std::size_t> drop;
    for (std::size_t i = 0; i < n_pending; ++i) {
      if (!(fds[2 + i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      ControlConn& conn = pending_[i];
      std::uint8_t tmp[65536];
      bool dead = false;
      while (true) {
        ssize_t r = ::recv(conn.fd, tmp, sizeof tmp, 0);
        if (r > 0) {
          conn.buf.insert(conn.buf.end(), tmp, tmp + r);
          continue;
        }
        if (r < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) break;
        if (r < 0 && errno == EINTR) continue;
        dead = true;
        break;
      }
      DecodeResult dr = decode_frame(conn.buf);
      if (dr.status == DecodeResult::Status::Ok) {
        if (const Joined* joined = std::get_if<Joined>(&dr.msg)) {
          Joined joined_msg = *joined;
          conn.buf.erase(
              conn.buf.begin(),
              conn.buf.begin() + static_cast<std::ptrdiff_t>(dr.consumed));
          promote_pending(i, joined_msg);  // moves the conn into conns_
          drop.push_back(i);
          continue;
        }
        dead = true;  // first frame must be Joined
      } else if (dr.status == DecodeResult::Status::Error) {
        dead = true;
      }
      if (dead) {
        ::close(conn.fd);
        drop.push_back(i);
      }
    }
    for (auto rit = drop.rbegin(); rit != drop.rend(); ++rit)
      pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(*rit));

    // Joined workers: hangup or garbage means eviction.
    for (std::size_t i = 0; i < order.size() && !finished_; ++i) {
      if (!(fds[2 + n_pending + i].revents & (POLLIN | POLLHUP | POLLERR)))
        continue;
      if (!conns_.count(order[i])) continue;  // evicted earlier this pass
      if (!pump_conn(order[i]) && !finished_ && conns_.count(order[i]))
        handle_evict(order[i]);
    }

    // Accepts last so new fds never alias this iteration's poll indices.
    if (fds[0].revents & POLLIN) {
      while (true) {
        int conn = ::accept(control_l_.fd, nullptr, nullptr);
        if (conn < 0) break;
        set_nonblocking(conn);
        ControlConn c;
        c.fd = conn;
        pending_.push_back(std::move(c));
      }
    }
    if (fds[1].revents & POLLIN) {
      while (true) {
        int conn = ::accept(fetch_l_.fd, nullptr, nullptr);
        if (conn < 0) break;
        auto shared = serve_shared_;
        serve_threads_.emplace_back(
            [conn, shared] { serve_fetch(conn, shared); });
      }
    }
  }
}

void LiveManager::teardown() {
  for (auto& [id, conn] : conns_) ::close(conn.fd);
  conns_.clear();
  for (ControlConn& conn : pending_) ::close(conn.fd);
  pending_.clear();
  ::close(control_l_.fd);
  ::close(fetch_l_.fd);
  for (std::size_t i = 0; i < pids_.size(); ++i) {
    if (reaped_[i]) continue;
    ::kill(pids_[i], SIGKILL);
    int status = 0;
    ::waitpid(pids_[i], &status, 0);
  }
  // Serve threads exit once their peers are gone; joining here keeps the
  // process thread-free between runs (fork safety for repeated calls).
  for (std::thread& t : serve_threads_) t.join();
  serve_threads_.clear();
}

void LiveManager::finalize_report() {
  report_.elapsed_ms = now_ms();
  report_.per_worker_materializations.assign(next_id_, 0);
  for (const auto& [id, count] : mats_per_worker_)
    if (id < next_id_) report_.per_worker_materializations[id] = count;
  report_.tasks_completed = static_cast<std::uint32_t>(mgr_.results.size());

  auto fail = [&](const std::string& why) {
    if (report_.failure.empty()) report_.failure = why;
  };
  if (!finished_) {
    fail("run did not complete");
  } else {
    if (report_.tasks_completed != opt_.tasks)
      fail("completed " + std::to_string(report_.tasks_completed) + " of " +
           std::to_string(opt_.tasks) + " tasks");
    if (!check_conservation(mgr_)) fail("task conservation violated");
    if (opt_.mode == ContextMode::Pervasive) {
      for (const auto& [id, count] : mats_per_worker_)
        if (count != 1)
          fail("worker " + std::to_string(id) + " materialized " +
               std::to_string(count) + " times (expected 1)");
    }
    if (opt_.kill_one) {
      if (report_.killed_worker < 0)
        fail("kill requested but no worker was killed");
      else if (kill_requeue_expected_ && report_.requeues == 0)
        fail("killed a busy worker but no requeue happened");
    }
  }
  report_.passed = report_.failure.empty();

  bool keep = opt_.keep_work_dir || !report_.passed || !opt_.work_dir.empty();
  if (keep) {
    report_.work_dir = root_.string();
  } else if (root_generated_) {
    std::error_code ec;
    fs::remove_all(root_, ec);
  }
}

LiveSmokeReport LiveManager::run() {
  t0_ = SteadyClock::now();
  live_m_ = scale_workload_for_live(default_workload());
  ctx_ = build_live_context(live_m_);
  recipe_objects_by_id_[ctx_.recipe_id] = ctx_.object_ids;

  setup_dirs();
  control_l_ = make_listener();
  fetch_l_ = make_listener();
  // The manager accept-drains after poll(); the workers' listeners stay
  // blocking for their dedicated accept threads.
  set_nonblocking(control_l_.fd);
  set_nonblocking(fetch_l_.fd);
  serve_shared_ = std::make_shared<ServeShared>();
  serve_shared_->dir = store_dir_;
  serve_shared_->cap = static_cast<int>(opt_.transfer_cap);

  spawn_workers();  // forks before any thread exists in this process

  std::vector<TaskSpec> specs;
  specs.reserve(opt_.tasks);
  for (std::uint32_t i = 0; i < opt_.tasks; ++i) {
    TaskSpec spec;
    spec.task_id = i;
    spec.recipe_id = ctx_.recipe_id;
    spec.batch_size = opt_.batch;
    specs.push_back(spec);
  }
  submit_tasks(mgr_, log_, 0, specs);

  join_threshold_ = static_cast<std::size_t>(
      std::ceil(calib::kDefaultStartThreshold * opt_.workers));
  if (join_threshold_ == 0) {
    eligible_ = true;
    EventRecord rec;
    rec.time = 0;
    rec.kind = EventKind::DispatchEligible;
    log_.append(rec);
  }

  event_loop();
  teardown();
  finalize_report();
  return report_;
}

}  // namespace

LiveSmokeReport live_smoke(const LiveSmokeOptions& options) {
  if (options.tasks == 0 || options.batch == 0)
    throw std::invalid_argument("live smoke needs tasks >= 1 and batch >= 1");
  if (options.workers > 64)
    throw std::invalid_argument("live smoke supports at most 64 workers");
  if (options.mode == ContextMode::Naive)
    throw std::invalid_argument(
        "live mode supports partial and pervasive context modes");
  if (options.timeout_ms <= 0)
    throw std::invalid_argument("live smoke timeout must be positive");
  LiveManager manager(options);
  return manager.run();
}

std::string live_smoke_report_text(const LiveSmokeReport& report) {
  std::string out;
  out += "live-smoke: ";
  out += report.passed ? "PASS" : "FAIL";
  out += "\n";
  if (!report.failure.empty()) out += "  failure: " + report.failure + "\n";
  out += "  workers joined:    " + std::to_string(report.workers_joined) + "\n";
  out += "  tasks completed:   " + std::to_string(report.tasks_completed) + "\n";
  out +=
      "  duplicate results: " + std::to_string(report.duplicate_results) + "\n";
  out += "  requeues:          " + std::to_string(report.requeues) + "\n";
  out += "  materializations:  " +
         std::to_string(report.materializations_total) + " (per worker:";
  for (std::uint64_t count : report.per_worker_materializations)
    out += " " + std::to_string(count);
  out += ")\n";
  if (report.killed_worker >= 0)
    out +=
        "  killed worker:     " + std::to_string(report.killed_worker) + "\n";
  out += "  elapsed:           " + std::to_string(report.elapsed_ms) + " ms\n";
  if (!report.work_dir.empty())
    out += "  work dir:          " + report.work_dir + "\n";
  if (!report.passed) {
    out += "  --- log ---\n";
    for (const std::string& line : report.log) out += "  " + line + "\n";
  }
  return out;
}

}  // namespace gleaner
