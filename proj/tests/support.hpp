#pragma once

// Dense reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "homodescent/hqm.hpp"
#include "homodescent/linear_map.hpp"
#include "homodescent/rng.hpp"

namespace hd_test {

using homodescent::Matrix;
using homodescent::Vector;

inline Matrix random_symmetric(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
  return scale * 0.5 * (a + a.transpose());
}

inline Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * nd(rng);
  return v;
}

inline Matrix augmented_dense(const Matrix& h, const Vector& g, double delta) {
  const auto n = h.rows();
  Matrix a(n + 1, n + 1);
  a.topLeftCorner(n, n) = h;
  a.topRightCorner(n, 1) = g;
  a.bottomLeftCorner(1, n) = g.transpose();
  a(n, n) = -delta;
  return a;
}

struct DenseEig {
  Vector values;
  Matrix vectors;
};

inline DenseEig dense_eig(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  return {es.eigenvalues(), es.eigenvectors()};
}

inline double dense_lambda_min(const Matrix& a) { return dense_eig(a).values[0]; }

// theta(delta) = -lambda_min(A(delta)) from the dense oracle.
inline double dense_theta(const Matrix& h, const Vector& g, double delta) {
  return -dense_lambda_min(augmented_dense(h, g, delta));
}

// d(delta) from the dense leftmost eigenvector, or empty if |t| is tiny.
inline Vector dense_direction(const Matrix& h, const Vector& g, double delta) {
  const auto e = dense_eig(augmented_dense(h, g, delta));
  const Vector z = e.vectors.col(0);
  const double t = z[z.size() - 1];
  if (std::abs(t) < 1e-8) return Vector();
  return z.head(z.size() - 1) / t;
}

// Matrix with prescribed eigenvalues in a random orthonormal basis.
inline Matrix with_spectrum(const Vector& eigenvalues, std::mt19937_64& rng, Matrix* basis = nullptr) {
  const int n = static_cast<int>(eigenvalues.size());
  Matrix g(n, n);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = nd(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  if (basis) *basis = q;
  Matrix a = q * eigenvalues.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

}  // namespace hd_test
