#include "homodescent/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "homodescent/rng.hpp"

namespace homodescent {

namespace {

void check_finite(const Vector& v, const char* where) {
  if (!v.allFinite()) throw NumericError(std::string(where) + ": non-finite operator output");
}

// Smallest eigenpair of the tridiagonal matrix with the given diagonal and
// off-diagonal.
std::pair<double, Vector> tridiagonal_bottom(const std::vector<double>& alpha,
                                             const std::vector<double>& beta) {
  const Index m = static_cast<Index>(alpha.size());
  if (m == 1) return {alpha[0], Vector::Ones(1)};
  Vector diag = Eigen::Map<const Vector>(alpha.data(), m);
  Vector sub = Eigen::Map<const Vector>(beta.data(), m - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  return {es.eigenvalues()[0], es.eigenvectors().col(0)};
}

// Removes the components of w along the first `cols` columns of q. Two passes
// keep the basis orthogonal to working precision.
void orthogonalize(const Matrix& q, Index cols, Vector& w) {
  for (int pass = 0; pass < 2; ++pass) {
    w.noalias() -= q.leftCols(cols) * (q.leftCols(cols).transpose() * w);
  }
}

}  // namespace

EigenPair leftmost_eigenpair(const LinearMap& map, const LanczosOptions& opts) {
  require(map.valid(), "leftmost_eigenpair: empty map");
  require(opts.tol > 0.0, "leftmost_eigenpair: tol must be positive");
  require(opts.max_iters >= 1, "leftmost_eigenpair: max_iters must be >= 1");

  const Index n = map.dim();
  const Index kmax = std::min<Index>(n, opts.max_iters);
  Rng rng(opts.seed);

  Matrix q(n, kmax);
  std::vector<double> alpha;
  std::vector<double> beta;
  alpha.reserve(kmax);
  beta.reserve(kmax);

  q.col(0) = random_unit(n, rng);
  double anorm = 0.0;
  EigenPair out;

  for (Index j = 0; j < kmax; ++j) {
    Vector w = map.apply(q.col(j));
    check_finite(w, "leftmost_eigenpair");
    const double a = q.col(j).dot(w);
    w -= a * q.col(j);
    if (j > 0) w -= beta[j - 1] * q.col(j - 1);
    orthogonalize(q, j + 1, w);
    const double b = w.norm();
    alpha.push_back(a);
    anorm = std::max(anorm, std::abs(a) + b + (j > 0 ? beta[j - 1] : 0.0));

    const Index m = j + 1;
    const bool last = (m == kmax);
    const bool breakdown = b <= 1e-13 * std::max(anorm, std::numeric_limits<double>::min());
    const bool check = m <= 40 || m % 5 == 0 || last || breakdown;

    if (check) {
      auto [theta, y] = tridiagonal_bottom(alpha, beta);
      const double estimate = breakdown ? 0.0 : b * std::abs(y[m - 1]);
      // Residuals below a few ulps of ||A|| are out of reach in double.
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() * anorm;
      if (estimate <= std::max(opts.tol * (1.0 + std::abs(theta)), floor) || last) {
        Vector x = q.leftCols(m) * y;
        x.normalize();
        const Vector ax = map.apply(x);
        check_finite(ax, "leftmost_eigenpair");
        const double rq = x.dot(ax);
        out.value = rq;
        out.vector = x;
        out.residual = (ax - rq * x).norm();
        out.iterations = static_cast<int>(m);
        out.converged = out.residual <= std::max(opts.tol * (1.0 + std::abs(rq)), floor);
        if (out.converged || last) return out;
      }
    }

    if (breakdown) {
      // Invariant subspace found but the pair is not accurate enough: restart
      // from a fresh direction orthogonal to everything seen so far.
      Vector fresh = standard_normal(n, rng);
      orthogonalize(q, m, fresh);
      const double fn = fresh.norm();
      if (fn == 0.0) return out;
      beta.push_back(0.0);
      q.col(m) = fresh / fn;
    } else {
      beta.push_back(b);
      q.col(m) = w / b;
    }
  }
  return out;
}

EigenPair leftmost_eigenpair(const LinearMap& map, double tol, int max_iters,
                             std::uint64_t seed) {
  return leftmost_eigenpair(map, LanczosOptions{tol, max_iters, seed});
}

SpectralBounds spectral_bounds(const LinearMap& map, int steps, std::uint64_t seed) {
  require(steps >= 1, "spectral_bounds: steps must be >= 1");
  const Index n = map.dim();
  const Index kmax = std::min<Index>(n, steps);
  Rng rng(seed);
  Matrix q(n, kmax);
  std::vector<double> alpha;
  std::vector<double> beta;
  q.col(0) = random_unit(n, rng);
  for (Index j = 0; j < kmax; ++j) {
    Vector w = map.apply(q.col(j));
    check_finite(w, "spectral_bounds");
    const double a = q.col(j).dot(w);
    w -= a * q.col(j);
    if (j > 0) w -= beta[j - 1] * q.col(j - 1);
    orthogonalize(q, j + 1, w);
    alpha.push_back(a);
    const double b = w.norm();
    if (j + 1 == kmax || b <= 1e-13 * (std::abs(a) + 1e-300)) break;
    beta.push_back(b);
    q.col(j + 1) = w / b;
  }
  beta.resize(alpha.size() - 1);
  if (alpha.size() == 1) return {alpha[0], alpha[0]};
  Vector diag = Eigen::Map<const Vector>(alpha.data(), static_cast<Index>(alpha.size()));
  Vector sub = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

MinEigenspace min_eigenspace(const LinearMap& map, double cluster_tol, double tol,
                             std::uint64_t seed) {
  const Index n = map.dim();
  const int budget = static_cast<int>(n) + 1;
  MinEigenspace out;

  EigenPair first = leftmost_eigenpair(map, tol, budget, derive_seed(seed, 0));
  out.iterations += first.iterations;
  out.converged = first.converged;
  out.value = first.value;
  out.values.push_back(first.value);

  const double band = cluster_tol >= 0.0 ? cluster_tol : 1e-8 * (1.0 + std::abs(first.value));
  const double shift = std::max(1.0 + std::abs(first.value), 10.0 * band);

  Matrix basis(n, 1);
  basis.col(0) = first.vector;

  while (basis.cols() < n) {
    const Matrix v = basis;
    LinearMap deflated(n, [map, v, shift](const Vector& x) -> Vector {
      return map.apply(x) + shift * (v * (v.transpose() * x));
    });
    // Each deflated vector carries a few ulps of the shift into the operator.
    const double tol_k = std::max(
        tol, 64.0 * std::numeric_limits<double>::epsilon() * shift * static_cast<double>(v.cols() + 1));
    EigenPair next = leftmost_eigenpair(deflated, tol_k, budget,
                                        derive_seed(seed, static_cast<std::uint64_t>(v.cols())));
    out.iterations += next.iterations;
    if (next.value > out.value + band) break;
    out.converged = out.converged && next.converged;
    Vector u = next.vector;
    orthogonalize(v, v.cols(), u);
    const double un = u.norm();
    if (un < 1e-8) break;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = u / un;
    out.values.push_back(next.value);
  }
  out.basis = std::move(basis);
  return out;
}

Projection min_eigenspace_projection(const LinearMap& map, const Vector& g,
                                     double cluster_tol, double tol, std::uint64_t seed) {
  require(g.size() == map.dim(), "min_eigenspace_projection: length mismatch");
  const MinEigenspace space = min_eigenspace(map, cluster_tol, tol, seed);
  if (!space.converged) {
    throw ConvergenceError("min_eigenspace_projection: eigensolver did not converge");
  }
  Projection p;
  p.projection = space.basis * (space.basis.transpose() * g);
  p.norm = p.projection.norm();
  return p;
}

}  // namespace homodescent
