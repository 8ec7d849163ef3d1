#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dse {

/// Engine used everywhere randomness is needed. Sampling goes through the
/// helpers below instead of std distributions so that sequences are
/// identical across standard library implementations.
using Rng = std::mt19937_64;

/// Unbiased uniform draw from [0, n). n must be > 0.
inline std::uint64_t pick_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// k distinct indices from [0, n), in random order (partial Fisher-Yates).
inline std::vector<std::size_t> pick_distinct(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k && i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(pick_index(rng, n - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

/// FNV-1a over bytes; stable across platforms (unlike std::hash).
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Mixes a name into a master seed to derive independent per-task seeds.
inline std::uint64_t derive_seed(std::string_view name, std::uint64_t master_seed) {
  std::uint64_t z = fnv1a64(name) ^ (master_seed + 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace dse
