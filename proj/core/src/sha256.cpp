#include "gleaner/sha256.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace gleaner {

Sha256::Sha256() {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest init failed");
  }
  ctx_ = ctx;
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(const void* data, std::size_t len) {
  if (len == 0) return;
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, len) != 1) {
    throw std::runtime_error("sha256: digest update failed");
  }
}

Hash256 Sha256::finish() {
  Hash256 out;
  unsigned int n = 0;
  EVP_MD_CTX* ctx = static_cast<EVP_MD_CTX*>(ctx_);
  if (EVP_DigestFinal_ex(ctx, out.bytes.data(), &n) != 1 || n != 32) {
    throw std::runtime_error("sha256: digest final failed");
  }
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest reinit failed");
  }
  return out;
}

Hash256 sha256(const void* data, std::size_t len) {
  Sha256 h;
  h.update(data, len);
  return h.finish();
}

Hash256 sha256(const std::vector<std::uint8_t>& bytes) {
  return sha256(bytes.data(), bytes.size());
}

Hash256 sha256(const std::string& s) { return sha256(s.data(), s.size()); }

}  // namespace gleaner
