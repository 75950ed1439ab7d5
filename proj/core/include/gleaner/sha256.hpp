#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gleaner/types.hpp"

namespace gleaner {

// Streaming SHA-256.  Thin wrapper over the system crypto provider so the
// rest of the code never touches provider handles directly.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t len);
  void update(const std::vector<std::uint8_t>& bytes) {
    update(bytes.data(), bytes.size());
  }
  void update(const std::string& s) { update(s.data(), s.size()); }

  // Finalizes and resets, so the instance can be reused for the next digest.
  Hash256 finish();

 private:
  void* ctx_;
};

Hash256 sha256(const void* data, std::size_t len);
Hash256 sha256(const std::vector<std::uint8_t>& bytes);
Hash256 sha256(const std::string& s);

}  // namespace gleaner
