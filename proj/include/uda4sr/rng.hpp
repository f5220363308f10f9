#pragma once

#include <cstdint>
#include <random>

namespace uda4sr {

using Rng = std::mt19937_64;

// Every random stream in a run derives from one global seed and a stream id:
//   seed(stream) = splitmix64(global_seed ^ splitmix64(stream_id))
// Sub-streams (per epoch, per view, per sequence) chain derive_seed again.
enum class Stream : std::uint64_t {
  kInit = 1,
  kGan = 2,
  kSynthesize = 3,
  kTrainShuffle = 4,
  kTrainInstances = 5,
  kNegatives = 6,
  kViews = 7,
  kDropout = 8,
  kRouting = 9,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) {
  return splitmix64(seed ^ splitmix64(stream_id));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream s) {
  return derive_seed(seed, static_cast<std::uint64_t>(s));
}

inline Rng make_rng(std::uint64_t seed, Stream s) { return Rng(derive_seed(seed, s)); }

}  // namespace uda4sr
