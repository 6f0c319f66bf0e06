#pragma once

#include <cstdint>
#include <random>

#include "homodescent/types.hpp"

namespace homodescent {

/// Kinds of random draws made during a run. Each kind owns an independent
/// stream so that, e.g., adding a line-search probe never shifts the
/// gradient samples of a later iteration.
enum class StreamKind : std::uint64_t {
  kGradient = 1,
  kHessian = 2,
  kLinesearch = 3,
  kPerturbation = 4,
  kSpider = 5,
  kInit = 6,
  kOracle = 7,
  kSgd = 8,
};

/// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based stream key: deterministic function of (seed, k, kind, extra).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k, StreamKind kind,
                          std::uint64_t extra = 0);

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t extra) {
  return mix64(seed ^ mix64(extra + 0x9e3779b97f4a7c15ULL));
}

using Rng = std::mt19937_64;

Vector standard_normal(Index n, Rng& rng);

/// Uniformly distributed unit vector.
Vector random_unit(Index n, Rng& rng);

}  // namespace homodescent
