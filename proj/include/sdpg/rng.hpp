#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sdpg {

using Rng = std::mt19937_64;

/// Named consumers of randomness inside one run. Each gets an independent
/// stream derived from the run's master seed.
enum class Stream : std::uint64_t {
  env = 1,
  agent_init = 2,
  exploration = 3,
  smoothing = 4,
  sampling = 5,
  eval = 6,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based derivation: the seed of a stream depends only on the master
/// seed and the stream id, so adding a stream never shifts the others.
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

}  // namespace sdpg
