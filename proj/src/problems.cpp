#include "homodescent/problems.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>

#include "homodescent/rng.hpp"

namespace homodescent {

Vector Problem::default_start(std::uint64_t seed) const {
  Rng rng(derive_seed(seed, 0, StreamKind::kInit));
  return random_unit(dim(), rng);
}

double Problem::f_star() const {
  if (!has_f_star()) throw Unsupported(info_.name + ": optimal value is not known");
  return info_.f_star;
}

bool Problem::in_level_set(const Vector& x) const {
  if (!std::isfinite(info_.level_value)) return true;
  return value(x) <= info_.level_value * (1.0 + 1e-9);
}

// ---------------------------------------------------------------------------

PlQuadratic::PlQuadratic(Index dim, double cond, std::uint64_t seed)
    : Problem(ProblemInfo{}) {
  require(dim >= 1, "make_pl_quadratic: dim must be >= 1");
  require(cond >= 1.0 && std::isfinite(cond), "make_pl_quadratic: cond must be >= 1");
  eigenvalues_.resize(dim);
  for (Index i = 0; i < dim; ++i) {
    const double s = dim == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(dim - 1);
    eigenvalues_[i] = std::pow(cond, s);
  }
  Rng rng(derive_seed(seed, 0, StreamKind::kInit, 0x91));
  Matrix gauss(dim, dim);
  for (Index j = 0; j < dim; ++j) gauss.col(j) = standard_normal(dim, rng);
  Eigen::HouseholderQR<Matrix> qr(gauss);
  eigenvectors_ = qr.householderQ() * Matrix::Identity(dim, dim);
  a_ = eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.transpose();
  a_ = 0.5 * (a_ + a_.transpose()).eval();

  info_.name = "pl_quadratic";
  info_.f_star = 0.0;
  info_.alpha = 2.0;
  info_.c_gd = 1.0 / (2.0 * eigenvalues_.minCoeff());
  info_.lip_g = eigenvalues_.maxCoeff();
  info_.lip_h = 0.0;
}

double PlQuadratic::value(const Vector& x) const {
  require(x.size() == dim(), "PlQuadratic::value: length mismatch");
  return 0.5 * x.dot(a_ * x);
}

Vector PlQuadratic::gradient(const Vector& x) const {
  require(x.size() == dim(), "PlQuadratic::gradient: length mismatch");
  return a_ * x;
}

LinearMap PlQuadratic::hessian_map(const Vector& x) const {
  require(x.size() == dim(), "PlQuadratic::hessian_map: length mismatch");
  const Matrix a = a_;
  return LinearMap(dim(), [a](const Vector& v) -> Vector { return a * v; });
}

Vector PlQuadratic::default_start(std::uint64_t seed) const {
  return Problem::default_start(seed);
}

std::shared_ptr<PlQuadratic> make_pl_quadratic(Index dim, double cond, std::uint64_t seed) {
  return std::make_shared<PlQuadratic>(dim, cond, seed);
}

// ---------------------------------------------------------------------------

double pnorm_lip_h(double p, double radius) {
  require(p >= 2.0, "pnorm_lip_h: p must be >= 2");
  require(radius > 0.0, "pnorm_lip_h: radius must be positive");
  if (p == 2.0) return 0.0;
  if (p < 3.0) return std::numeric_limits<double>::infinity();
  // The third derivative along x has magnitude p(p-2)(p-1) r^(p-3); the mixed
  // directions give p(p-2) r^(p-3) * 2/sqrt(4-p), which only matters near p=3.
  double m = p - 1.0;
  if (p < 4.0) m = std::max(m, 2.0 / std::sqrt(4.0 - p));
  return p * (p - 2.0) * std::pow(radius, p - 3.0) * m;
}

PnormPower::PnormPower(Index dim, double p, double radius)
    : Problem(ProblemInfo{}), dim_(dim), p_(p), radius_(radius) {
  require(dim >= 1, "make_pnorm_power: dim must be >= 1");
  if (!(p >= 2.0) || !std::isfinite(p)) {
    throw ContractViolation("make_pnorm_power: p must be >= 2 (Hessian unbounded at the origin)");
  }
  require(radius > 0.0 && std::isfinite(radius), "make_pnorm_power: radius must be positive");
  info_.name = "pnorm";
  info_.f_star = 0.0;
  info_.alpha = p / (p - 1.0);
  info_.c_gd = std::pow(p, -p / (p - 1.0));
  info_.lip_g = p * (p - 1.0) * std::pow(radius, p - 2.0);
  info_.lip_h = pnorm_lip_h(p, radius);
  info_.level_set_radius = radius;
  info_.level_value = std::pow(radius, p);
}

double PnormPower::value(const Vector& x) const {
  require(x.size() == dim_, "PnormPower::value: length mismatch");
  return std::pow(x.norm(), p_);
}

Vector PnormPower::gradient(const Vector& x) const {
  require(x.size() == dim_, "PnormPower::gradient: length mismatch");
  const double r = x.norm();
  if (r == 0.0) return Vector::Zero(dim_);
  return p_ * std::pow(r, p_ - 2.0) * x;
}

LinearMap PnormPower::hessian_map(const Vector& x) const {
  require(x.size() == dim_, "PnormPower::hessian_map: length mismatch");
  const double r = x.norm();
  const double p = p_;
  if (r == 0.0) {
    const double a = p == 2.0 ? 2.0 : 0.0;
    return LinearMap(dim_, [a](const Vector& v) -> Vector { return a * v; });
  }
  const double a = p * std::pow(r, p - 2.0);
  const double b = p * (p - 2.0) * std::pow(r, p - 4.0);
  const Vector xc = x;
  return LinearMap(dim_, [a, b, xc](const Vector& v) -> Vector {
    return a * v + (b * xc.dot(v)) * xc;
  });
}

Vector PnormPower::default_start(std::uint64_t seed) const {
  return radius_ * Problem::default_start(seed);
}

std::shared_ptr<PnormPower> make_pnorm_power(Index dim, double p, double radius) {
  return std::make_shared<PnormPower>(dim, p, radius);
}

// ---------------------------------------------------------------------------

double gd_ratio(const Problem& problem, const Vector& x) {
  const double gap = problem.value(x) - problem.f_star();
  const double gn = problem.gradient(x).norm();
  if (gn == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return gap / std::pow(gn, problem.alpha());
}

namespace {

Vector sample_ball(Index n, double radius, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = radius * std::pow(u(rng), 1.0 / static_cast<double>(n));
  return r * random_unit(n, rng);
}

double sampling_radius(const Problem& problem, double fallback) {
  const double r = problem.info().level_set_radius;
  return std::isfinite(r) ? r : fallback;
}

}  // namespace

GdCheck verify_gd_constant(const Problem& problem, int n_points, std::uint64_t seed,
                           double c_gd_override) {
  if (!problem.has_f_star()) {
    throw Unsupported("verify_gd_constant: " + problem.name() + " has no known f*");
  }
  require(n_points >= 1, "verify_gd_constant: n_points must be >= 1");
  const double c = std::isnan(c_gd_override) ? problem.c_gd() : c_gd_override;
  Rng rng(derive_seed(seed, 0x6d));
  const double radius = sampling_radius(problem, 1.0);
  GdCheck out;
  for (int i = 0; i < n_points; ++i) {
    const Vector x = sample_ball(problem.dim(), radius, rng);
    const double ratio = gd_ratio(problem, x);
    if (std::isnan(ratio)) continue;
    out.worst_ratio = std::max(out.worst_ratio, ratio);
  }
  out.holds = out.worst_ratio <= c * (1.0 + 1e-6);
  return out;
}

DerivativeCheck check_derivatives(const Problem& problem, int pairs, std::uint64_t seed,
                                  double sample_radius) {
  require(pairs >= 1, "check_derivatives: pairs must be >= 1");
  Rng rng(derive_seed(seed, 0x64));
  const double radius = std::min(sampling_radius(problem, sample_radius), sample_radius);
  DerivativeCheck out;
  for (int i = 0; i < pairs; ++i) {
    const Vector x = sample_ball(problem.dim(), radius, rng);
    const Vector u = random_unit(problem.dim(), rng);
    const double h = 1e-5 * std::max(x.norm(), 1e-2);

    const Vector g = problem.gradient(x);
    const double fd = (problem.value(x + h * u) - problem.value(x - h * u)) / (2.0 * h);
    const double gu = g.dot(u);
    out.gradient_error =
        std::max(out.gradient_error, std::abs(fd - gu) / std::max(g.norm(), 1e-12));

    const Vector hu = problem.hessian_map(x).apply(u);
    const Vector fdh = (problem.gradient(x + h * u) - problem.gradient(x - h * u)) / (2.0 * h);
    out.hessian_error =
        std::max(out.hessian_error, (fdh - hu).norm() / std::max(hu.norm(), 1e-12));
  }
  return out;
}

}  // namespace homodescent
