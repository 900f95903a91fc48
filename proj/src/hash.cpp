#include "stormgen/hash.hpp"

#include <array>
#include <cstdio>
#include <memory>

#include <openssl/evp.h>

#include "stormgen/error.hpp"

namespace stormgen {

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error("sha256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string json_hash(const nlohmann::json& doc) { return sha256_hex(doc.dump()); }

std::string matrix_hash(const Eigen::MatrixXd& m) {
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(m.data()),
                                     static_cast<std::size_t>(m.size()) * sizeof(double)));
}

}  // namespace stormgen
