#include "curate/hash.hpp"

#include <sodium.h>

#include <stdexcept>

namespace curate {
namespace {

void ensure_sodium() {
  static const bool ready = [] { return sodium_init() >= 0; }();
  if (!ready) throw std::runtime_error("libsodium initialization failed");
}

}  // namespace

std::uint64_t stable_hash64(std::string_view data, std::uint64_t seed) {
  ensure_sodium();
  unsigned char key[crypto_shorthash_KEYBYTES] = {};
  for (int i = 0; i < 8; ++i) key[i] = static_cast<unsigned char>(seed >> (8 * i));
  unsigned char out[crypto_shorthash_BYTES];
  crypto_shorthash(out, reinterpret_cast<const unsigned char*>(data.data()),
                   data.size(), key);
  std::uint64_t h = 0;
  for (int i = 7; i >= 0; --i) h = (h << 8) | out[i];
  return h;
}

double unit_interval(std::uint64_t hash) {
  return static_cast<double>(hash >> 11) * 0x1.0p-53;
}

Fingerprint fingerprint128(std::string_view data) {
  ensure_sodium();
  Fingerprint out{};
  crypto_generichash(out.data(), out.size(),
                     reinterpret_cast<const unsigned char*>(data.data()),
                     data.size(), nullptr, 0);
  return out;
}

}  // namespace curate
