#pragma once

#include <cstdint>

#include "specvla/types.hpp"

namespace specvla::hash {

// splitmix64 finalizer
constexpr std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix(h ^ mix(v + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

constexpr std::uint64_t prefix_seed(std::uint64_t seed, std::uint64_t prompt_id,
                                    std::uint64_t observation_id) {
  return combine(combine(mix(seed), prompt_id), observation_id);
}

constexpr std::uint64_t extend(std::uint64_t h, ActionToken t) {
  return combine(h, static_cast<std::uint64_t>(t.bin) + 1);
}

inline std::uint64_t prefix(std::uint64_t seed, const PrefixState& state) {
  std::uint64_t h = prefix_seed(seed, state.prompt_id, state.observation_id);
  for (auto t : state.emitted) h = extend(h, t);
  return h;
}

/// Independent stream `lane` derived from a hash state.
constexpr std::uint64_t lane(std::uint64_t h, std::uint64_t lane) {
  return mix(h ^ (0xd6e8feb86659fd93ULL * (lane + 1)));
}

}  // namespace specvla::hash
