#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>

#include "homodescent/types.hpp"

namespace homodescent {

/// Matrix-free symmetric operator of fixed dimension.
///
/// The Hessian is only ever touched through this interface. Copies share the
/// callable and the application counter, so a map handed to a solver keeps
/// reporting into the counter of the object it was copied from. The counter is
/// atomic; applying the map is otherwise pure.
class LinearMap {
 public:
  using ApplyFn = std::function<Vector(const Vector&)>;

  LinearMap() = default;
  LinearMap(Index dim, ApplyFn fn);

  static LinearMap from_dense(Matrix m);
  static LinearMap identity(Index dim);
  static LinearMap diagonal(Vector diag);
  static LinearMap zero(Index dim);

  Index dim() const { return dim_; }
  bool valid() const { return static_cast<bool>(fn_); }

  /// Applies the operator and bumps matvec_count by one.
  Vector apply(const Vector& x) const;
  Vector operator()(const Vector& x) const { return apply(x); }

  std::uint64_t matvec_count() const { return counter_ ? counter_->load() : 0; }
  void reset_count() const {
    if (counter_) counter_->store(0);
  }

 private:
  Index dim_ = 0;
  ApplyFn fn_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

/// Map scaled and shifted: x -> scale * A x + shift * x.
LinearMap scaled_shifted(const LinearMap& a, double scale, double shift);

/// The gradient-Hessian augmented operator
///   [v; t] -> [H v + t g ; g.v - t delta]
/// of dimension n + 1.
class AugmentedMap {
 public:
  AugmentedMap(LinearMap inner, Vector g, double delta);

  Index dim() const { return inner_.dim() + 1; }
  const LinearMap& inner() const { return inner_; }
  const Vector& gradient() const { return g_; }
  double delta() const { return delta_; }

  /// One application of the inner map per call.
  Vector apply(const Vector& z) const;

  /// The same operator behind the generic LinearMap interface. Applications
  /// through the returned map are counted on the inner map.
  LinearMap as_linear_map() const;

 private:
  LinearMap inner_;
  Vector g_;
  double delta_;
};

Vector apply_augmented(const AugmentedMap& map, const Vector& z);

/// Default refusal threshold for dense materialisation.
inline constexpr Index kDenseCap = 512;

/// Builds the full matrix by applying the map to every basis vector.
/// Intended for test oracles and diagnostics only.
Matrix dense_materialize(const LinearMap& map, Index cap = kDenseCap);
Matrix dense_materialize(const AugmentedMap& map, Index cap = kDenseCap);

/// Largest |u.Aw - w.Au| / (1 + |u.Aw|) over random unit pairs.
double symmetry_defect(const LinearMap& map, int probes, std::uint64_t seed);

}  // namespace homodescent
