#include "homodescent/rng.hpp"

#include <cmath>

namespace homodescent {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k, StreamKind kind,
                          std::uint64_t extra) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ (k * 0xd1b54a32d192ed03ULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(kind) << 56));
  return mix64(h ^ extra);
}

Vector standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Vector random_unit(Index n, Rng& rng) {
  Vector v = standard_normal(n, rng);
  double norm = v.norm();
  while (norm == 0.0) {
    v = standard_normal(n, rng);
    norm = v.norm();
  }
  return v / norm;
}

}  // namespace homodescent
