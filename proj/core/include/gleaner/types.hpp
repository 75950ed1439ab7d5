#pragma once

// Core vocabulary shared by every module: identifiers, byte blobs, hardware
// descriptions, task specs, and the append-only event record emitted by the
// engine.  Everything here is a plain value type; behaviour lives elsewhere.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gleaner {

// Engine time is integer milliseconds from scenario start.  All durations are
// converted to ms once, at the model boundary, so event ordering never
// depends on floating-point rounding.
using EngineMs = std::int64_t;

using TaskId = std::uint64_t;
using WorkerId = std::uint64_t;

struct Hash256 {
  std::array<std::uint8_t, 32> bytes{};

  bool operator==(const Hash256&) const = default;
  auto operator<=>(const Hash256&) const = default;

  std::string hex() const;
  static std::optional<Hash256> from_hex(const std::string& s);
};

using RecipeId = Hash256;

// A content blob.  In simulation the payload is usually empty and only
// `declared_size` matters (it drives staging time and disk accounting); in
// live mode `data` holds real bytes and declared_size == data.size().
struct Blob {
  std::vector<std::uint8_t> data;
  std::uint64_t declared_size = 0;

  std::uint64_t size() const {
    return data.empty() ? declared_size : data.size();
  }
  bool operator==(const Blob&) const = default;
};

struct NamedBlob {
  std::string name;
  Blob blob;
  bool operator==(const NamedBlob&) const = default;
};

// The four-element description of everything a task invocation needs beyond
// its per-call arguments: code to run, the environment it imports, code that
// builds the expensive in-memory object, and the files that build step reads.
struct ContextRecipe {
  Blob function_code;
  Blob dependency_package;
  Blob context_code;
  std::vector<NamedBlob> context_inputs;

  bool operator==(const ContextRecipe&) const = default;

  // Total bytes that must exist on a worker's disk before invocation.
  std::uint64_t total_size() const;
};

struct TaskSpec {
  TaskId task_id = 0;
  RecipeId recipe_id{};
  std::uint32_t batch_size = 1;

  bool operator==(const TaskSpec&) const = default;
};

enum class TaskOutcome : std::uint8_t {
  Completed = 0,
  Failed = 1,
};

struct InvocationResult {
  TaskId task_id = 0;
  std::uint32_t attempt = 0;
  TaskOutcome outcome = TaskOutcome::Completed;
  std::uint32_t inferences_done = 0;
  std::string detail;  // failure reason; empty on success

  bool operator==(const InvocationResult&) const = default;
};

// Hardware description of one worker slot.  speed_factor scales inference
// throughput relative to the reference GPU (1.0 == reference).
struct WorkerProfile {
  std::string gpu_model;
  double speed_factor = 1.0;
  std::uint32_t cores = 2;
  double mem_gb = 10.0;
  double disk_gb = 70.0;
  std::uint32_t gpus = 1;
};

bool operator==(const WorkerProfile& a, const WorkerProfile& b);

}  // namespace gleaner
