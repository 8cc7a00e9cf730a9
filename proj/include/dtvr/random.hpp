#pragma once

#include <cstdint>
#include <random>

namespace dtvr {

using Rng = std::mt19937_64;

// Independent named streams so that, for one run seed, the channel draws,
// bias drift, gaze paths, network init and exploration never share state.
enum class Stream : std::uint32_t {
  Channel = 1,
  Bias = 2,
  Gaze = 3,
  NetInit = 4,
  Exploration = 5,
  Replay = 6,
  Compose = 7,
};

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint32_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), sub};
  return Rng(seq);
}

}  // namespace dtvr
