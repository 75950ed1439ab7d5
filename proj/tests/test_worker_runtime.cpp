#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "gleaner/calibration.hpp"
#include "gleaner/sha256.hpp"
#include "gleaner/worker_runtime.hpp"

using namespace gleaner;

namespace {

constexpr std::uint64_t kGb = 1000000000ULL;

Hash256 h(const std::string& s) { return sha256(s); }

StageItem item(const std::string& name, std::uint64_t size,
               ObjectKind kind = ObjectKind::ContextInput) {
  StageItem it;
  it.object_id = h(name);
  it.kind = kind;
  it.size = size;
  it.source.addr = "mgr:1";
  return it;
}

WorkerState worker(std::uint64_t capacity = 70 * kGb) {
  WorkerState w;
  w.id = 1;
  w.cache_capacity = capacity;
  return w;
}

}  // namespace

TEST_CASE("base context fits a stock worker disk and stages once") {
  WorkerState w = worker();
  std::vector<StageItem> manifest = {
      item("package", static_cast<std::uint64_t>(3.7 * kGb),
           ObjectKind::DependencyPackage),
      item("model", static_cast<std::uint64_t>(3.7 * kGb),
           ObjectKind::ContextInput)};

  StageBegin begin = stage_begin(w, manifest);
  REQUIRE(begin.ok);
  CHECK(begin.to_transfer.size() == 2);
  CHECK(begin.already_present.empty());
  CHECK(w.cache_used == manifest[0].size + manifest[1].size);
  CHECK(w.cache.at(manifest[0].object_id).state == ObjectState::Transferring);

  CHECK(stage_object_done(w, manifest[0].object_id));
  CHECK(stage_object_done(w, manifest[1].object_id));
  CHECK(w.cache.at(manifest[0].object_id).state == ObjectState::Present);

  // Re-staging the same manifest acks without transferring.
  StageBegin again = stage_begin(w, manifest);
  REQUIRE(again.ok);
  CHECK(again.to_transfer.empty());
  CHECK(again.already_present.size() == 2);
  CHECK(w.cache_used == manifest[0].size + manifest[1].size);
}

TEST_CASE("stage completion is rejected for unknown or settled objects") {
  WorkerState w = worker();
  CHECK_FALSE(stage_object_done(w, h("never-staged")));
  stage_begin(w, {item("obj", 100)});
  CHECK(stage_object_done(w, h("obj")));
  CHECK_FALSE(stage_object_done(w, h("obj")));  // already Present
}

TEST_CASE("an in-flight transfer absorbs duplicate stage requests") {
  WorkerState w = worker();
  stage_begin(w, {item("obj", 100)});
  StageBegin dup = stage_begin(w, {item("obj", 100)});
  REQUIRE(dup.ok);
  CHECK(dup.to_transfer.empty());       // rides the existing transfer
  CHECK(dup.already_present.empty());   // not Present yet, no ack
  CHECK(w.cache_used == 100);
}

TEST_CASE("oversized manifests fail after cleanup cannot help") {
  WorkerState w = worker(10 * kGb);
  StageBegin begin = stage_begin(w, {item("huge", 11 * kGb)});
  CHECK_FALSE(begin.ok);
  CHECK(w.cache.empty());
  CHECK(w.cache_used == 0);
}

TEST_CASE("unreferenced task outputs are evicted oldest-first to make room") {
  WorkerState w = worker(10 * kGb);
  stage_begin(w, {item("out-old", 4 * kGb), item("out-new", 4 * kGb)});
  stage_object_done(w, h("out-old"));
  stage_object_done(w, h("out-new"));
  w.cache.at(h("out-old")).task_output = true;
  w.cache.at(h("out-new")).task_output = true;
  w.cache.at(h("out-old")).last_use_seq = 1;
  w.cache.at(h("out-new")).last_use_seq = 2;

  // 4 GB needed, 2 GB free: evicting the older output suffices.
  StageBegin begin = stage_begin(w, {item("fresh", 4 * kGb)});
  REQUIRE(begin.ok);
  CHECK(w.cache.count(h("out-old")) == 0);
  CHECK(w.cache.count(h("out-new")) == 1);
  CHECK(w.cache_used == 8 * kGb);

  // Non-output entries are never cleanup victims.
  StageBegin refused = stage_begin(w, {item("giant", 9 * kGb)});
  CHECK_FALSE(refused.ok);
  CHECK(w.cache.count(h("out-new")) == 1);
}

TEST_CASE("library materializes exactly once per recipe") {
  WorkerState w = worker();
  Hash256 recipe = h("recipe");
  std::vector<Hash256> objects = {h("package"), h("model")};
  stage_begin(w, {item("package", 100), item("model", 200)});

  // Objects still Transferring: divergence, not a materialization.
  CHECK(ensure_library_begin(w, recipe, objects) == EnsureOutcome::MissingObjects);
  CHECK(w.context_materializations == 0);

  stage_object_done(w, h("package"));
  stage_object_done(w, h("model"));
  CHECK(ensure_library_begin(w, recipe, objects) == EnsureOutcome::Materializing);
  CHECK(w.context_materializations == 1);

  // Interleaved ensure while materializing does not double-count.
  CHECK(ensure_library_begin(w, recipe, objects) == EnsureOutcome::Materializing);
  CHECK(w.context_materializations == 1);

  CHECK(ensure_library_done(w, recipe));
  CHECK_FALSE(ensure_library_done(w, recipe));  // already Ready
  CHECK(ensure_library_begin(w, recipe, objects) == EnsureOutcome::AlreadyReady);
  CHECK(w.context_materializations == 1);

  // A different recipe materializes separately.
  CHECK(ensure_library_begin(w, h("recipe2"), {h("package")}) ==
        EnsureOutcome::Materializing);
  CHECK(w.context_materializations == 2);
}

TEST_CASE("sandboxes bracket invocations one-to-one") {
  WorkerState w = worker();
  CHECK(invocation_begin(w, 7, 0));
  CHECK_FALSE(invocation_begin(w, 8, 0));  // already busy
  CHECK(w.sandboxes_created == 1);
  invocation_end(w);
  CHECK(w.sandboxes_destroyed == 1);
  invocation_end(w);  // idempotent
  CHECK(w.sandboxes_destroyed == 1);
  CHECK(invocation_begin(w, 8, 0));
  invocation_end(w);
  CHECK(w.sandboxes_created == w.sandboxes_destroyed);
}

TEST_CASE("peer serving honours the outbound transfer cap") {
  WorkerState w = worker();
  w.transfer_cap = 3;
  stage_begin(w, {item("obj", 100)});

  ServeDecision d = serve_peer_begin(w, h("obj"));
  CHECK_FALSE(d.accepted);
  CHECK(d.deny_reason == "absent");  // still Transferring

  stage_object_done(w, h("obj"));
  for (int i = 0; i < 3; ++i) {
    d = serve_peer_begin(w, h("obj"));
    CHECK(d.accepted);
  }
  d = serve_peer_begin(w, h("obj"));
  CHECK_FALSE(d.accepted);
  CHECK(d.deny_reason == "at-cap");

  serve_peer_end(w);
  CHECK(serve_peer_begin(w, h("obj")).accepted);
  CHECK(w.active_outbound_transfers == 3);

  CHECK(serve_peer_begin(w, h("missing")).deny_reason == "absent");
}

TEST_CASE("eviction wipes the worker with no residue") {
  WorkerState w = worker();
  stage_begin(w, {item("obj", 100)});
  stage_object_done(w, h("obj"));
  ensure_library_begin(w, h("r"), {h("obj")});
  invocation_begin(w, 1, 0);
  serve_peer_begin(w, h("obj"));

  evict_worker(w);
  CHECK(w.cache.empty());
  CHECK(w.cache_used == 0);
  CHECK(w.libraries.empty());
  CHECK(w.active_outbound_transfers == 0);
  CHECK_FALSE(w.current_invocation.has_value());
}

TEST_CASE("duration model matches the frozen constants") {
  const WorkloadModel m = default_workload();

  // Base context from the manager: (3.7 + 3.7) GB at 2.0 s/GB.
  CHECK(stage_duration_ms(m, false) == 14800);
  // Peers serve at twice the manager rate.
  CHECK(stage_duration_ms(m, true) == 7400);
  // Resident-library materialization is one model load.
  CHECK(materialize_duration_ms(m) == 14800);

  // Warm batch-100 window: 0.05 + 100 * t_inf.
  EngineMs warm100 = invocation_duration_ms(m, 1.0, 100, false);
  CHECK(warm100 ==
        static_cast<EngineMs>(
            (calib::kWarmDispatchOverhead + 100.0 * calib::kTInfRef) * 1000.0 +
            0.5));
  CHECK(warm100 > 27000);
  CHECK(warm100 < 27500);

  // Warm single inference sits well under a second.
  EngineMs warm1 = invocation_duration_ms(m, 1.0, 1, false);
  CHECK(warm1 >= 100);
  CHECK(warm1 <= 1000);

  // Cold single inference pays the in-window model load: 10-20 seconds.
  EngineMs cold1 = invocation_duration_ms(m, 1.0, 1, true);
  CHECK(cold1 >= 10000);
  CHECK(cold1 <= 20000);
  CHECK(cold1 > warm1 + materialize_duration_ms(m));  // load + penalty

  // Slower GPUs stretch the inference term only.
  EngineMs slow100 = invocation_duration_ms(m, 0.5, 100, false);
  CHECK(slow100 > 2 * warm100 - 100);
  CHECK(slow100 < 2 * warm100);
}
