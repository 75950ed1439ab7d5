#include "gleaner/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "gleaner/recipe.hpp"
#include "gleaner/scheduler.hpp"
#include "gleaner/sha256.hpp"
#include "gleaner/worker_runtime.hpp"

namespace gleaner {
namespace {

constexpr double kBytesPerGb = 1e9;

enum class Ev : std::uint8_t {
  TraceJoin,
  TraceEvict,
  StageDone,
  MaterializeDone,
  InvocationDone,
  FactoryTick,
};

struct SimEvent {
  EngineMs time = 0;
  std::uint64_t seq = 0;
  Ev kind = Ev::FactoryTick;
  std::size_t trace_index = 0;   // TraceJoin / TraceEvict
  WorkerId worker = 0;
  std::uint32_t gen = 0;         // worker instance the event belongs to
  TaskId task = 0;
  std::uint32_t attempt = 0;
  std::uint32_t transfer_id = 0; // StageDone
  bool resident = false;         // MaterializeDone: library vs in-window load
};

struct EventAfter {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

struct WorkerSim {
  std::uint32_t gen = 0;
  bool alive = false;
  WorkerState rt;
  double speed = 1.0;
  bool has_base = false;     // all base-context objects Present
  EngineMs staged_at = -1;   // holder priority: earliest staged serves first
  bool receiving = false;
  std::uint32_t recv_transfer = 0;
};

struct Transfer {
  WorkerId receiver = 0;
  std::uint32_t receiver_gen = 0;
  bool from_manager = true;
  WorkerId source = 0;
  std::uint32_t source_gen = 0;
  bool cancelled = false;
};

class Engine {
 public:
  explicit Engine(const ScenarioConfig& config) : cfg_(config) {}

  RunOutput run();

 private:
  // --- event plumbing ---
  void push(SimEvent ev) {
    ev.seq = next_seq_++;
    heap_.push(ev);
  }
  void log_event(EventKind kind, TaskId task = 0, std::uint32_t attempt = 0,
                 std::uint64_t worker = kManagerActor, std::uint64_t aux1 = 0,
                 std::uint64_t aux2 = 0) {
    EventRecord rec;
    rec.time = clock_;
    rec.kind = kind;
    rec.task = task;
    rec.attempt = attempt;
    rec.worker = worker;
    rec.aux1 = aux1;
    rec.aux2 = aux2;
    out_.log.append(rec);
  }

  // --- handlers ---
  void on_trace_join(std::size_t index);
  void on_trace_evict(std::size_t index);
  void on_stage_done(const SimEvent& ev);
  void on_materialize_done(const SimEvent& ev);
  void on_invocation_done(const SimEvent& ev);
  void on_factory_tick();

  void admit_worker(const TraceEvent& te);
  void kill_worker(WorkerId id);
  void do_match();
  void try_serve_stages();
  void start_invocation(WorkerSim& ws, TaskId task, std::uint32_t attempt,
                        bool cold);
  void after_stage(WorkerSim& ws);
  void finish_run_if_done();

  WorkerSim* live_worker(WorkerId id, std::uint32_t gen) {
    auto it = workers_.find(id);
    if (it == workers_.end() || !it->second.alive || it->second.gen != gen)
      return nullptr;
    return &it->second;
  }

  const ScenarioConfig& cfg_;
  RunOutput out_;
  ManagerState mgr_;
  std::map<WorkerId, WorkerSim> workers_;  // ordered for deterministic scans
  std::priority_queue<SimEvent, std::vector<SimEvent>, EventAfter> heap_;
  std::uint64_t next_seq_ = 0;
  EngineMs clock_ = 0;

  Hash256 recipe_id_{};
  std::vector<Hash256> recipe_objects_;
  std::map<Hash256, std::vector<Hash256>> recipe_objects_by_id_;
  std::vector<StageItem> base_manifest_;

  std::deque<std::pair<WorkerId, std::uint32_t>> stage_waiting_;
  std::unordered_map<std::uint32_t, Transfer> transfers_;
  std::uint32_t next_transfer_ = 0;
  std::uint32_t mgr_active_ = 0;

  std::deque<std::size_t> supply_;  // trace joins awaiting factory admission
  bool factory_mode_ = false;
  std::size_t pending_real_ = 0;  // non-tick events in the heap

  std::size_t joins_seen_ = 0;
  std::size_t join_threshold_ = 0;
  bool eligible_ = false;
  bool finished_ = false;
  std::uint64_t num_tasks_ = 0;
};

void Engine::admit_worker(const TraceEvent& te) {
  auto [it, fresh] = workers_.try_emplace(te.worker_id);
  WorkerSim& ws = it->second;
  if (!fresh && ws.alive) {
    log_event(EventKind::ProtocolError, 0, 0, te.worker_id, 3);  // double join
    return;
  }
  std::uint32_t gen = ws.gen + 1;
  ws = WorkerSim{};
  ws.gen = gen;
  ws.alive = true;
  ws.speed = te.speed_factor;
  ws.rt.id = te.worker_id;
  ws.rt.profile.gpu_model = te.gpu_model;
  ws.rt.profile.speed_factor = te.speed_factor;
  ws.rt.profile.cores = cfg_.worker_shape.cores;
  ws.rt.profile.mem_gb = cfg_.worker_shape.mem_gb;
  ws.rt.profile.disk_gb = cfg_.worker_shape.disk_gb;
  ws.rt.cache_capacity =
      static_cast<std::uint64_t>(cfg_.worker_shape.disk_gb * kBytesPerGb);
  ws.rt.transfer_cap = cfg_.transfer_cap;
  worker_joined(mgr_, out_.log, clock_, te.worker_id, ws.rt.profile);
  ++joins_seen_;
  if (!eligible_ && joins_seen_ >= join_threshold_) {
    eligible_ = true;
    log_event(EventKind::DispatchEligible, 0, 0, kManagerActor, joins_seen_);
  }
  if (eligible_) do_match();
}

void Engine::on_trace_join(std::size_t index) {
  if (factory_mode_) {
    supply_.push_back(index);
    return;
  }
  admit_worker(cfg_.trace.events[index]);
}

void Engine::kill_worker(WorkerId id) {
  auto it = workers_.find(id);
  if (it == workers_.end() || !it->second.alive) {
    on_worker_evicted(mgr_, out_.log, clock_, id);  // logs the unknown-worker warning
    return;
  }
  WorkerSim& ws = it->second;
  ws.alive = false;

  // Transfer it was receiving: free the source slot, drop the transfer.
  if (ws.receiving) {
    auto tr = transfers_.find(ws.recv_transfer);
    if (tr != transfers_.end() && !tr->second.cancelled) {
      tr->second.cancelled = true;
      if (tr->second.from_manager) {
        --mgr_active_;
      } else if (WorkerSim* src =
                     live_worker(tr->second.source, tr->second.source_gen)) {
        serve_peer_end(src->rt);
      }
    }
    ws.receiving = false;
  }
  // Transfers it was sourcing: receivers go back to the front of the stage
  // queue and retry from a surviving holder.
  std::vector<WorkerId> orphaned;
  for (auto& [tid, tr] : transfers_) {
    if (tr.cancelled || tr.from_manager) continue;
    if (tr.source != id || tr.source_gen != ws.gen) continue;
    tr.cancelled = true;
    if (WorkerSim* recv = live_worker(tr.receiver, tr.receiver_gen)) {
      recv->receiving = false;
      orphaned.push_back(tr.receiver);
    }
  }
  std::sort(orphaned.begin(), orphaned.end());
  for (auto rit = orphaned.rbegin(); rit != orphaned.rend(); ++rit)
    stage_waiting_.emplace_front(*rit, workers_.at(*rit).gen);

  evict_worker(ws.rt);
  on_worker_evicted(mgr_, out_.log, clock_, id);
  try_serve_stages();
  if (eligible_) do_match();
}

void Engine::on_trace_evict(std::size_t index) {
  const TraceEvent& te = cfg_.trace.events[index];
  if (factory_mode_) {
    // Eviction of a slot still waiting in the supply just removes the offer.
    auto it = std::find_if(supply_.begin(), supply_.end(), [&](std::size_t i) {
      return cfg_.trace.events[i].worker_id == te.worker_id;
    });
    if (it != supply_.end()) {
      supply_.erase(it);
      return;
    }
  }
  kill_worker(te.worker_id);
}

void Engine::try_serve_stages() {
  while (true) {
    // Drop dead or superseded waiters.
    while (!stage_waiting_.empty()) {
      auto [id, gen] = stage_waiting_.front();
      if (live_worker(id, gen)) break;
      stage_waiting_.pop_front();
    }
    if (stage_waiting_.empty()) return;

    // Source preference: earliest-staged live holder with a free outbound
    // slot, then the manager if below cap.  Naive mode never has holders
    // (caches are dropped after each task and never advertised).
    WorkerSim* source = nullptr;
    if (cfg_.context_mode != ContextMode::Naive) {
      for (auto& [id, ws] : workers_) {
        if (!ws.alive || !ws.has_base) continue;
        if (ws.rt.active_outbound_transfers >= ws.rt.transfer_cap) continue;
        if (!source || ws.staged_at < source->staged_at ||
            (ws.staged_at == source->staged_at && id < source->rt.id))
          source = &ws;
      }
    }
    bool from_manager = false;
    if (!source) {
      if (mgr_active_ >= cfg_.transfer_cap) return;  // wait for a slot
      from_manager = true;
    }

    auto [rid, rgen] = stage_waiting_.front();
    stage_waiting_.pop_front();
    WorkerSim& recv = workers_.at(rid);

    StageBegin begin = stage_begin(recv.rt, base_manifest_);
    if (!begin.ok) {
      // Base context cannot fit: report failure; the task is rescheduled.
      log_event(EventKind::StageInFailed, 0, 0, rid);
      InvocationResult res;
      if (auto task = mgr_.worker_table.at(rid).running_task) {
        res.task_id = *task;
        res.attempt = mgr_.attempts.at(*task);
        res.outcome = TaskOutcome::Failed;
        res.detail = "stage-in failed";
        on_result(mgr_, out_.log, clock_, res);
      }
      continue;
    }
    if (begin.to_transfer.empty()) {
      // Everything already Present (e.g. partial-mode redispatch).
      after_stage(recv);
      continue;
    }

    std::uint32_t tid = next_transfer_++;
    Transfer tr;
    tr.receiver = rid;
    tr.receiver_gen = rgen;
    tr.from_manager = from_manager;
    if (!from_manager) {
      tr.source = source->rt.id;
      tr.source_gen = source->gen;
      ServeDecision sd = serve_peer_begin(source->rt, base_manifest_[0].object_id);
      (void)sd;  // holder with a free slot by construction
      log_event(EventKind::TransferStarted, 0, 0, source->rt.id, rid);
    } else {
      ++mgr_active_;
    }
    transfers_.emplace(tid, tr);
    recv.receiving = true;
    recv.recv_transfer = tid;
    log_event(EventKind::StageInStarted, 0, 0, rid, from_manager ? 0 : 1,
              from_manager ? kManagerActor : tr.source);

    SimEvent done;
    done.time = clock_ + stage_duration_ms(cfg_.workload, !from_manager);
    done.kind = Ev::StageDone;
    done.worker = rid;
    done.gen = rgen;
    done.transfer_id = tid;
    push(done);
    ++pending_real_;
  }
}

void Engine::after_stage(WorkerSim& ws) {
  auto task = mgr_.worker_table.at(ws.rt.id).running_task;
  if (!task) return;  // defensive: staging only happens with a task bound
  std::uint32_t attempt = mgr_.attempts.at(*task);
  if (cfg_.context_mode == ContextMode::Pervasive) {
    EnsureOutcome o = ensure_library_begin(ws.rt, recipe_id_, recipe_objects_);
    if (o == EnsureOutcome::AlreadyReady) {
      start_invocation(ws, *task, attempt, false);
      return;
    }
    log_event(EventKind::MaterializeStarted, *task, attempt, ws.rt.id);
    SimEvent done;
    done.time = clock_ + materialize_duration_ms(cfg_.workload);
    done.kind = Ev::MaterializeDone;
    done.worker = ws.rt.id;
    done.gen = ws.gen;
    done.task = *task;
    done.attempt = attempt;
    done.resident = true;
    push(done);
    ++pending_real_;
  } else {
    start_invocation(ws, *task, attempt, true);
  }
}

void Engine::on_stage_done(const SimEvent& ev) {
  --pending_real_;
  auto tr = transfers_.find(ev.transfer_id);
  if (tr == transfers_.end()) return;
  if (tr->second.cancelled) {  // slot already released at cancellation time
    transfers_.erase(tr);
    return;
  }
  Transfer t = tr->second;
  transfers_.erase(tr);
  if (t.from_manager) {
    --mgr_active_;
  } else if (WorkerSim* src = live_worker(t.source, t.source_gen)) {
    serve_peer_end(src->rt);
    log_event(EventKind::TransferFinished, 0, 0, t.source, t.receiver);
  }
  WorkerSim* recv = live_worker(ev.worker, ev.gen);
  if (!recv) {
    try_serve_stages();
    return;
  }
  recv->receiving = false;
  for (const StageItem& it : base_manifest_)
    stage_object_done(recv->rt, it.object_id);
  recv->has_base = true;
  recv->staged_at = clock_;
  if (cfg_.context_mode != ContextMode::Naive) {
    auto& view = mgr_.worker_table.at(ev.worker);
    for (const StageItem& it : base_manifest_)
      view.cached_objects.insert(it.object_id);
  }
  log_event(EventKind::StageInFinished, 0, 0, ev.worker,
            t.from_manager ? 0 : 1,
            t.from_manager ? kManagerActor : t.source);
  try_serve_stages();
  after_stage(*recv);
}

void Engine::start_invocation(WorkerSim& ws, TaskId task, std::uint32_t attempt,
                              bool cold) {
  invocation_begin(ws.rt, task, attempt);
  log_event(EventKind::InvocationStarted, task, attempt, ws.rt.id, cold);
  if (cold) {
    // Context loads inside the invocation window; the load itself is a
    // materialization (fresh each task without a resident library).
    log_event(EventKind::MaterializeStarted, task, attempt, ws.rt.id);
    SimEvent mat;
    mat.time = clock_ + materialize_duration_ms(cfg_.workload);
    mat.kind = Ev::MaterializeDone;
    mat.worker = ws.rt.id;
    mat.gen = ws.gen;
    mat.task = task;
    mat.attempt = attempt;
    mat.resident = false;
    push(mat);
    ++pending_real_;
  }
  const TaskSpec& spec = mgr_.specs.at(task);
  SimEvent done;
  done.time = clock_ + invocation_duration_ms(cfg_.workload, ws.speed,
                                              spec.batch_size, cold);
  done.kind = Ev::InvocationDone;
  done.worker = ws.rt.id;
  done.gen = ws.gen;
  done.task = task;
  done.attempt = attempt;
  push(done);
  ++pending_real_;
}

void Engine::on_materialize_done(const SimEvent& ev) {
  --pending_real_;
  WorkerSim* ws = live_worker(ev.worker, ev.gen);
  if (!ws) return;
  if (ev.resident) {
    ensure_library_done(ws->rt, recipe_id_);
    mgr_.worker_table.at(ev.worker).ready_libraries.insert(recipe_id_);
    log_event(EventKind::MaterializeFinished, ev.task, ev.attempt, ev.worker,
              1);
    start_invocation(*ws, ev.task, ev.attempt, false);
  } else {
    // In-window load completed; inference continues until InvocationDone.
    log_event(EventKind::MaterializeFinished, ev.task, ev.attempt, ev.worker,
              0);
  }
}

void Engine::on_invocation_done(const SimEvent& ev) {
  --pending_real_;
  WorkerSim* ws = live_worker(ev.worker, ev.gen);
  if (!ws) return;
  if (!ws->rt.current_invocation ||
      ws->rt.current_invocation->first != ev.task ||
      ws->rt.current_invocation->second != ev.attempt)
    return;  // superseded
  invocation_end(ws->rt);
  if (cfg_.context_mode == ContextMode::Naive) {
    // No reuse of any kind: drop the cache so the next task re-stages.
    ws->rt.cache.clear();
    ws->rt.cache_used = 0;
    ws->rt.libraries.clear();
    ws->has_base = false;
    ws->staged_at = -1;
    mgr_.worker_table.at(ev.worker).cached_objects.clear();
  }
  const TaskSpec& spec = mgr_.specs.at(ev.task);
  InvocationResult res;
  res.task_id = ev.task;
  res.attempt = ev.attempt;
  res.outcome = TaskOutcome::Completed;
  res.inferences_done = spec.batch_size;
  if (on_result(mgr_, out_.log, clock_, res) == ResultDisposition::Accepted)
    out_.results.push_back(res);
  finish_run_if_done();
  if (finished_) return;
  do_match();
}

void Engine::do_match() {
  auto decisions = match_tasks(mgr_, out_.log, clock_, recipe_objects_by_id_);
  for (const DispatchDecision& d : decisions) {
    WorkerSim& ws = workers_.at(d.worker_id);
    switch (d.path) {
      case DispatchPath::LibraryReady:
        log_event(EventKind::LibraryHit, d.task_id, d.attempt, d.worker_id);
        start_invocation(ws, d.task_id, d.attempt, false);
        break;
      case DispatchPath::CachedOnly:
        if (cfg_.context_mode == ContextMode::Pervasive) {
          after_stage(ws);  // objects present: materialize, then run warm
        } else {
          start_invocation(ws, d.task_id, d.attempt, true);
        }
        break;
      case DispatchPath::Cold:
        stage_waiting_.emplace_back(d.worker_id, ws.gen);
        break;
    }
  }
  if (!decisions.empty()) try_serve_stages();
}

void Engine::on_factory_tick() {
  if (finished_) return;
  FactoryActions actions =
      factory_adjust(mgr_, static_cast<std::uint32_t>(supply_.size()),
                     cfg_.factory);
  for (std::uint32_t i = 0; i < actions.submit && !supply_.empty(); ++i) {
    std::size_t index = supply_.front();
    supply_.pop_front();
    admit_worker(cfg_.trace.events[index]);
  }
  for (WorkerId id : actions.retire) {
    auto it = workers_.find(id);
    if (it == workers_.end() || !it->second.alive) continue;
    if (mgr_.worker_table.at(id).running_task) continue;
    it->second.alive = false;
    on_worker_retired(mgr_, out_.log, clock_, id);
  }
  // Keep polling while anything can still happen; otherwise let the heap
  // drain so a stall is detected.
  if (!supply_.empty() || pending_real_ > 0 || !mgr_.worker_table.empty()) {
    SimEvent tick;
    tick.time = clock_ + cfg_.factory.poll_interval_ms;
    tick.kind = Ev::FactoryTick;
    push(tick);
  }
}

void Engine::finish_run_if_done() {
  if (finished_ || out_.results.size() < num_tasks_) return;
  finished_ = true;
  log_event(EventKind::RunCompleted, 0, 0, kManagerActor, num_tasks_);
}

RunOutput Engine::run() {
  auto violations = validate_scenario(cfg_);
  if (!violations.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& v : violations) msg += " [" + v + "]";
    throw std::invalid_argument(msg);
  }

  // Base context recipe: code objects are tiny; the dependency package and
  // model weights carry the configured sizes.
  ContextRecipe recipe;
  recipe.function_code.data.assign(64, 0xF1);
  recipe.context_code.data.assign(64, 0xC7);
  recipe.dependency_package.declared_size =
      static_cast<std::uint64_t>(cfg_.workload.package_size * kBytesPerGb);
  NamedBlob model;
  model.name = "model";
  model.blob.declared_size =
      static_cast<std::uint64_t>(cfg_.workload.model_size * kBytesPerGb);
  recipe.context_inputs.push_back(model);
  recipe_id_ = compute_recipe_id(recipe);

  auto add_object = [&](const std::vector<std::uint8_t>& data,
                        std::uint64_t declared, ObjectKind kind) {
    StageItem item;
    Sha256 h;
    if (!data.empty()) {
      h.update(data.data(), data.size());
    } else {
      std::uint8_t tag[9];
      for (int i = 0; i < 8; ++i)
        tag[i] = static_cast<std::uint8_t>(declared >> (56 - 8 * i));
      tag[8] = static_cast<std::uint8_t>(kind);
      h.update(tag, sizeof tag);
    }
    item.object_id = h.finish();
    item.kind = kind;
    item.size = data.empty() ? declared : data.size();
    base_manifest_.push_back(item);
    recipe_objects_.push_back(item.object_id);
  };
  add_object(recipe.function_code.data, 0, ObjectKind::FunctionCode);
  add_object({}, recipe.dependency_package.declared_size,
             ObjectKind::DependencyPackage);
  add_object(recipe.context_code.data, 0, ObjectKind::ContextCode);
  add_object({}, model.blob.declared_size, ObjectKind::ContextInput);
  recipe_objects_by_id_[recipe_id_] = recipe_objects_;

  num_tasks_ = cfg_.num_tasks();
  std::vector<TaskSpec> specs;
  specs.reserve(num_tasks_);
  std::uint64_t remaining = cfg_.total_inferences;
  for (std::uint64_t i = 0; i < num_tasks_; ++i) {
    TaskSpec spec;
    spec.task_id = i;
    spec.recipe_id = recipe_id_;
    spec.batch_size = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(cfg_.batch_size, remaining));
    remaining -= spec.batch_size;
    specs.push_back(spec);
  }
  submit_tasks(mgr_, out_.log, 0, specs);

  join_threshold_ = static_cast<std::size_t>(
      std::ceil(cfg_.start_threshold *
                static_cast<double>(cfg_.trace.initial_joins())));

  factory_mode_ =
      cfg_.factory.poll_interval_ms > 0 && cfg_.factory.max_workers > 0;
  for (std::size_t i = 0; i < cfg_.trace.events.size(); ++i) {
    SimEvent ev;
    ev.time = cfg_.trace.events[i].time_ms;
    ev.kind = cfg_.trace.events[i].action == TraceAction::WorkerJoin
                  ? Ev::TraceJoin
                  : Ev::TraceEvict;
    ev.trace_index = i;
    push(ev);
  }
  if (factory_mode_) {
    SimEvent tick;
    tick.time = 0;
    tick.kind = Ev::FactoryTick;
    push(tick);
  }
  if (cfg_.trace.initial_joins() == 0) {
    eligible_ = true;  // nothing to wait for; the run will stall
    log_event(EventKind::DispatchEligible, 0, 0, kManagerActor, 0);
  }

  while (!heap_.empty() && !finished_) {
    SimEvent ev = heap_.top();
    heap_.pop();
    clock_ = ev.time;
    switch (ev.kind) {
      case Ev::TraceJoin: on_trace_join(ev.trace_index); break;
      case Ev::TraceEvict: on_trace_evict(ev.trace_index); break;
      case Ev::StageDone: on_stage_done(ev); break;
      case Ev::MaterializeDone: on_materialize_done(ev); break;
      case Ev::InvocationDone: on_invocation_done(ev); break;
      case Ev::FactoryTick: on_factory_tick(); break;
    }
  }
  if (!finished_) {
    log_event(EventKind::RunStalled, 0, 0, kManagerActor,
              num_tasks_ - out_.results.size());
  }
  out_.status = finished_ ? RunStatus::Completed : RunStatus::Stalled;
  out_.summary = summarize(out_.log.records());
  return out_;
}

}  // namespace

RunOutput run_scenario(const ScenarioConfig& config) {
  Engine engine(config);
  return engine.run();
}

double closed_form_makespan(const ScenarioConfig& config) {
  const AvailabilityTrace& trace = config.trace;
  std::size_t W = trace.total_joins();
  if (W == 0 || trace.initial_joins() != W)
    throw std::invalid_argument("closed form requires a single join wave");
  double speed = 0.0;
  for (const TraceEvent& ev : trace.events) {
    if (ev.action == TraceAction::WorkerEvict)
      throw std::invalid_argument("closed form requires a churn-free trace");
    if (speed == 0.0) speed = ev.speed_factor;
    if (ev.speed_factor != speed)
      throw std::invalid_argument("closed form requires a homogeneous pool");
  }
  if (config.transfer_cap < W)
    throw std::invalid_argument(
        "closed form requires transfer_cap >= worker count");
  const WorkloadModel& m = config.workload;
  double K = static_cast<double>(config.num_tasks());
  double rounds = std::ceil(K / static_cast<double>(W));
  double B = static_cast<double>(config.batch_size);
  double stage = m.package_size * m.t_software_stage +
                 m.model_size * m.t_model_stage;
  double oh = m.warm_dispatch_overhead;
  switch (config.context_mode) {
    case ContextMode::Partial:
      return stage +
             rounds * (m.t_model_load + oh +
                       B * m.t_inf_ref * m.cold_inference_penalty / speed);
    case ContextMode::Pervasive:
      return stage + m.t_model_load + rounds * (oh + B * m.t_inf_ref / speed);
    default:
      throw std::invalid_argument(
          "closed form covers partial and pervasive modes");
  }
}

}  // namespace gleaner
