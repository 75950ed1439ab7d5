#include "gleaner/recipe.hpp"

#include <algorithm>
#include <cstdio>

#include "gleaner/sha256.hpp"

namespace gleaner {

// --- types.hpp implementations -------------------------------------------

std::string Hash256::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out(64, '0');
  for (std::size_t i = 0; i < 32; ++i) {
    out[2 * i] = digits[bytes[i] >> 4];
    out[2 * i + 1] = digits[bytes[i] & 0xf];
  }
  return out;
}

std::optional<Hash256> Hash256::from_hex(const std::string& s) {
  if (s.size() != 64) return std::nullopt;
  Hash256 h;
  for (std::size_t i = 0; i < 32; ++i) {
    int hi = -1, lo = -1;
    auto nib = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      return -1;
    };
    hi = nib(s[2 * i]);
    lo = nib(s[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    h.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return h;
}

std::uint64_t ContextRecipe::total_size() const {
  std::uint64_t n = function_code.size() + dependency_package.size() +
                    context_code.size();
  for (const auto& in : context_inputs) n += in.blob.size();
  return n;
}

bool operator==(const WorkerProfile& a, const WorkerProfile& b) {
  return a.gpu_model == b.gpu_model && a.speed_factor == b.speed_factor &&
         a.cores == b.cores && a.mem_gb == b.mem_gb && a.disk_gb == b.disk_gb &&
         a.gpus == b.gpus;
}

// --- canonical encoding ---------------------------------------------------

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

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

void put_blob(std::vector<std::uint8_t>& out, std::uint8_t kind,
              const Blob& b) {
  out.push_back(kind);
  put_u64(out, b.declared_size);
  put_u64(out, b.data.size());
  out.insert(out.end(), b.data.begin(), b.data.end());
}

}  // namespace

std::vector<std::uint8_t> canonical_recipe_encoding(
    const ContextRecipe& recipe) {
  static const char preamble[] = "gleaner.recipe.v1\n";
  std::vector<std::uint8_t> out;
  out.insert(out.end(), preamble, preamble + sizeof(preamble) - 1);

  put_blob(out, 0, recipe.function_code);
  put_blob(out, 1, recipe.dependency_package);
  put_blob(out, 2, recipe.context_code);

  // Inputs are order-insensitive: encode them name-sorted so permuted
  // construction yields the same id.  stable_sort keeps duplicate names in
  // construction order, which still hashes deterministically.
  std::vector<const NamedBlob*> sorted;
  sorted.reserve(recipe.context_inputs.size());
  for (const auto& in : recipe.context_inputs) sorted.push_back(&in);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const NamedBlob* a, const NamedBlob* b) {
                     return a->name < b->name;
                   });

  put_u32(out, static_cast<std::uint32_t>(sorted.size()));
  for (const NamedBlob* in : sorted) {
    out.push_back(3);
    put_u16(out, static_cast<std::uint16_t>(in->name.size()));
    out.insert(out.end(), in->name.begin(), in->name.end());
    put_u64(out, in->blob.declared_size);
    put_u64(out, in->blob.data.size());
    out.insert(out.end(), in->blob.data.begin(), in->blob.data.end());
  }
  return out;
}

RecipeId compute_recipe_id(const ContextRecipe& recipe) {
  return sha256(canonical_recipe_encoding(recipe));
}

}  // namespace gleaner
