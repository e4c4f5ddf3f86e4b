#pragma once

#include <cstdint>
#include <random>

namespace homeostat {

// splitmix64, used to derive independent sub-seeds from one base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic sub-seed for a named stream (weights, shuffle, controller...).
inline std::uint64_t sub_seed(std::uint64_t base, std::uint64_t stream_id) {
  std::uint64_t s = base ^ (0xa0761d6478bd642fULL * (stream_id + 1));
  return splitmix64(s);
}

inline std::mt19937_64 make_rng(std::uint64_t base, std::uint64_t stream_id) {
  return std::mt19937_64(sub_seed(base, stream_id));
}

}  // namespace homeostat
