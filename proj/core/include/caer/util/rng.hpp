#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace caer {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable child seed for a (seed, stream ids...) tuple, so per-clip and
// per-epoch randomness never depends on visitation order.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> ids) {
  std::uint64_t s = mix_seed(seed);
  for (auto id : ids) s = mix_seed(s ^ mix_seed(id + 0x632be59bd9b4e019ULL));
  return s;
}

}  // namespace caer
