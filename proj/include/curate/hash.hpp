#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace curate {

// Keyed 64-bit hash (SipHash-2-4) that is stable across runs, platforms and
// library versions. Every sampling decision in the toolkit is derived from it.
std::uint64_t stable_hash64(std::string_view data, std::uint64_t seed);

// Maps a hash to [0, 1) with 53 bits of resolution.
double unit_interval(std::uint64_t hash);

// Per-document uniform threshold u(id) = stable_hash64(id, seed) / 2^64.
inline double unit_threshold(std::string_view id, std::uint64_t seed) {
  return unit_interval(stable_hash64(id, seed));
}

using Fingerprint = std::array<std::uint8_t, 16>;

// 128-bit content fingerprint (BLAKE2b).
Fingerprint fingerprint128(std::string_view data);

struct FingerprintHash {
  std::size_t operator()(const Fingerprint& f) const noexcept {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | f[i];
    return static_cast<std::size_t>(v);
  }
};

}  // namespace curate
