#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace htc {

// FNV-1a, 64-bit. Stable across platforms and runs; used for cache entry
// checksums, config/dataset fingerprints and mock-draw seeding.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// splitmix64 finalizer; turns a counter/seed into a well-mixed word.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic uniform draw in [0, 1) keyed by (seed, key). Counter-based:
// the draw depends only on its inputs, never on call order.
inline double keyed_uniform(std::uint64_t seed, std::string_view key) {
  std::uint64_t h = splitmix64(fnv1a64(key) ^ splitmix64(seed));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::string to_hex(std::uint64_t value);

// Fingerprint of a file's bytes, as 16 hex chars. Throws DataError when the
// file cannot be read.
std::string file_checksum(const std::string& path);

}  // namespace htc
