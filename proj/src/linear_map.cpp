#include "homodescent/linear_map.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "homodescent/rng.hpp"

namespace homodescent {

LinearMap::LinearMap(Index dim, ApplyFn fn)
    : dim_(dim),
      fn_(std::move(fn)),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  require(dim > 0, "LinearMap: dimension must be positive");
  require(static_cast<bool>(fn_), "LinearMap: empty apply function");
}

LinearMap LinearMap::from_dense(Matrix m) {
  require(m.rows() == m.cols(), "LinearMap::from_dense: matrix must be square");
  const Index n = m.rows();
  auto shared = std::make_shared<const Matrix>(std::move(m));
  return LinearMap(n, [shared](const Vector& x) -> Vector { return (*shared) * x; });
}

LinearMap LinearMap::identity(Index dim) {
  return LinearMap(dim, [](const Vector& x) -> Vector { return x; });
}

LinearMap LinearMap::diagonal(Vector diag) {
  const Index n = diag.size();
  auto shared = std::make_shared<const Vector>(std::move(diag));
  return LinearMap(n, [shared](const Vector& x) -> Vector {
    return shared->cwiseProduct(x);
  });
}

LinearMap LinearMap::zero(Index dim) {
  return LinearMap(dim, [dim](const Vector&) -> Vector { return Vector::Zero(dim); });
}

Vector LinearMap::apply(const Vector& x) const {
  require(valid(), "LinearMap::apply on an empty map");
  if (x.size() != dim_) {
    throw ContractViolation("LinearMap::apply: expected length " + std::to_string(dim_) +
                            ", got " + std::to_string(x.size()));
  }
  counter_->fetch_add(1, std::memory_order_relaxed);
  Vector y = fn_(x);
  if (y.size() != dim_) throw ContractViolation("LinearMap::apply: operator returned wrong length");
  return y;
}

LinearMap scaled_shifted(const LinearMap& a, double scale, double shift) {
  return LinearMap(a.dim(), [a, scale, shift](const Vector& x) -> Vector {
    return scale * a.apply(x) + shift * x;
  });
}

AugmentedMap::AugmentedMap(LinearMap inner, Vector g, double delta)
    : inner_(std::move(inner)), g_(std::move(g)), delta_(delta) {
  require(inner_.valid(), "AugmentedMap: empty inner map");
  require(g_.size() == inner_.dim(), "AugmentedMap: gradient length must match inner dimension");
  require(std::isfinite(delta_), "AugmentedMap: delta must be finite");
}

Vector AugmentedMap::apply(const Vector& z) const {
  const Index n = inner_.dim();
  if (z.size() != n + 1) {
    throw ContractViolation("AugmentedMap::apply: expected length " + std::to_string(n + 1) +
                            ", got " + std::to_string(z.size()));
  }
  const double t = z[n];
  Vector out(n + 1);
  out.head(n) = inner_.apply(z.head(n)) + t * g_;
  out[n] = g_.dot(z.head(n)) - t * delta_;
  return out;
}

LinearMap AugmentedMap::as_linear_map() const {
  AugmentedMap self = *this;
  return LinearMap(dim(), [self](const Vector& z) -> Vector { return self.apply(z); });
}

Vector apply_augmented(const AugmentedMap& map, const Vector& z) { return map.apply(z); }

namespace {

template <typename Op>
Matrix materialize(Index n, Index cap, const Op& op) {
  if (n > cap) {
    throw ContractViolation("dense_materialize: dimension " + std::to_string(n) +
                            " exceeds cap " + std::to_string(cap));
  }
  Matrix m(n, n);
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    m.col(j) = op(e);
    e[j] = 0.0;
  }
  return m;
}

}  // namespace

Matrix dense_materialize(const LinearMap& map, Index cap) {
  return materialize(map.dim(), cap, [&](const Vector& e) { return map.apply(e); });
}

Matrix dense_materialize(const AugmentedMap& map, Index cap) {
  return materialize(map.dim(), cap, [&](const Vector& e) { return map.apply(e); });
}

double symmetry_defect(const LinearMap& map, int probes, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const Vector u = random_unit(map.dim(), rng);
    const Vector w = random_unit(map.dim(), rng);
    const double uaw = u.dot(map.apply(w));
    const double wau = w.dot(map.apply(u));
    worst = std::max(worst, std::abs(uaw - wau) / (1.0 + std::abs(uaw)));
  }
  return worst;
}

}  // namespace homodescent
