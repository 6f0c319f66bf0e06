#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "homodescent/linear_map.hpp"

namespace homodescent {

/// Constants describing a test objective. Lipschitz constants are valid on the
/// level set {F <= level_value}; level_value is infinite for globally smooth
/// problems.
struct ProblemInfo {
  std::string name;
  double f_star = std::numeric_limits<double>::quiet_NaN();
  double alpha = 2.0;
  double c_gd = std::numeric_limits<double>::quiet_NaN();
  double lip_g = std::numeric_limits<double>::infinity();
  double lip_h = std::numeric_limits<double>::infinity();
  double level_set_radius = std::numeric_limits<double>::infinity();
  double level_value = std::numeric_limits<double>::infinity();
  bool maximization = false;  // traces report -F
};

/// Smooth objective F: R^n -> R with exact first- and second-order access.
/// Immutable after construction.
class Problem {
 public:
  explicit Problem(ProblemInfo info) : info_(std::move(info)) {}
  virtual ~Problem() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual LinearMap hessian_map(const Vector& x) const = 0;

  /// Starting point used by the CLI when none is given.
  virtual Vector default_start(std::uint64_t seed) const;

  const ProblemInfo& info() const { return info_; }
  const std::string& name() const { return info_.name; }
  bool has_f_star() const { return !std::isnan(info_.f_star); }
  double f_star() const;
  double alpha() const { return info_.alpha; }
  double c_gd() const { return info_.c_gd; }
  double lip_g() const { return info_.lip_g; }
  double lip_h() const { return info_.lip_h; }

  /// F(x) within the level set on which the Lipschitz constants hold.
  bool in_level_set(const Vector& x) const;

 protected:
  ProblemInfo info_;
};

/// F(x) = 1/2 x'Ax with eigenvalues of A geometrically spaced in [1, cond]
/// and a random orthogonal eigenbasis.
class PlQuadratic : public Problem {
 public:
  PlQuadratic(Index dim, double cond, std::uint64_t seed);

  Index dim() const override { return a_.rows(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  LinearMap hessian_map(const Vector& x) const override;
  Vector default_start(std::uint64_t seed) const override;

  const Matrix& matrix() const { return a_; }
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }

 private:
  Matrix a_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
};

std::shared_ptr<PlQuadratic> make_pl_quadratic(Index dim, double cond, std::uint64_t seed);

/// F(x) = ||x||^p, p >= 2. Gradient dominated with alpha = p / (p - 1) and
/// c_gd = p^(-alpha), tight at every point. Lipschitz constants are reported
/// on the ball ||x|| <= radius.
class PnormPower : public Problem {
 public:
  PnormPower(Index dim, double p, double radius);

  Index dim() const override { return dim_; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  LinearMap hessian_map(const Vector& x) const override;
  Vector default_start(std::uint64_t seed) const override;

  double p() const { return p_; }
  double radius() const { return radius_; }

 private:
  Index dim_;
  double p_;
  double radius_;
};

std::shared_ptr<PnormPower> make_pnorm_power(Index dim, double p, double radius = 1.0);

/// Hessian Lipschitz constant of ||x||^p on ||x|| <= radius. Zero for p = 2,
/// infinite for 2 < p < 3.
double pnorm_lip_h(double p, double radius);

/// (F(x) - f*) / ||grad F(x)||^alpha; NaN at stationary points.
double gd_ratio(const Problem& problem, const Vector& x);

struct GdCheck {
  double worst_ratio = 0.0;
  bool holds = false;
};

/// Samples n_points in the level set (or the unit ball when it is unbounded)
/// and compares the worst ratio against c_gd. A finite c_gd_override replaces
/// the declared constant. Throws Unsupported when f* is unknown.
GdCheck verify_gd_constant(const Problem& problem, int n_points, std::uint64_t seed,
                           double c_gd_override = std::numeric_limits<double>::quiet_NaN());

/// Largest relative mismatch between central differences and the analytic
/// gradient / Hessian over random (x, direction) pairs in the level set.
struct DerivativeCheck {
  double gradient_error = 0.0;
  double hessian_error = 0.0;
};
DerivativeCheck check_derivatives(const Problem& problem, int pairs, std::uint64_t seed,
                                  double sample_radius = 1.0);

}  // namespace homodescent
