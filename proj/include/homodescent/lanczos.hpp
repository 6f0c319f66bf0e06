#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "homodescent/linear_map.hpp"

namespace homodescent {

struct EigenPair {
  double value = 0.0;
  Vector vector;         // unit norm
  double residual = 0.0;  // ||A v - value v||, measured with one extra application
  int iterations = 0;     // Lanczos steps taken
  bool converged = false;
};

struct LanczosOptions {
  double tol = 1e-10;
  int max_iters = 1000;  // capped at the operator dimension
  std::uint64_t seed = 0;
};

/// Smallest eigenpair of a symmetric operator by Lanczos with full
/// reorthogonalisation. On breakdown before convergence the iteration restarts
/// from a fresh random vector orthogonal to the current basis.
///
/// converged implies residual <= max(tol * (1 + |value|), 64 eps_mach ||A||est).
/// reported, not thrown; NaN from the operator throws NumericError.
EigenPair leftmost_eigenpair(const LinearMap& map, const LanczosOptions& opts);
EigenPair leftmost_eigenpair(const LinearMap& map, double tol, int max_iters,
                             std::uint64_t seed);

/// Ritz-value bounds after at most `steps` Lanczos steps. The interval lies
/// inside the spectrum; callers needing an upper bound on ||A|| must pad it.
struct SpectralBounds {
  double lo = 0.0;
  double hi = 0.0;
  double abs_max() const { return std::max(std::abs(lo), std::abs(hi)); }
};
SpectralBounds spectral_bounds(const LinearMap& map, int steps, std::uint64_t seed);

/// Orthonormal basis of the eigenspace of the smallest eigenvalue, found by
/// successive deflation. Eigenvalues within cluster_tol of the smallest are
/// treated as one eigenspace.
struct MinEigenspace {
  double value = 0.0;
  Matrix basis;  // dim x multiplicity, orthonormal columns
  std::vector<double> values;
  int iterations = 0;
  bool converged = true;
};

/// cluster_tol < 0 selects the default 1e-8 * (1 + |lambda_min|).
MinEigenspace min_eigenspace(const LinearMap& map, double cluster_tol, double tol,
                             std::uint64_t seed);

struct Projection {
  Vector projection;
  double norm = 0.0;
};

/// Orthogonal projection of g onto the minimal eigenspace of map.
/// Throws NumericError if the eigensolver fails to converge.
Projection min_eigenspace_projection(const LinearMap& map, const Vector& g,
                                     double cluster_tol, double tol, std::uint64_t seed);

}  // namespace homodescent
