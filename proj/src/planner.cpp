#include "homodescent/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "homodescent/types.hpp"

namespace homodescent {

void PlannerConstants::validate() const {
  for (double c : {c_g, c_h, c_eig, c_ls, c_iter, c_vr, c_kc}) {
    require(c > 0.0 && std::isfinite(c), "PlannerConstants: constants must be positive");
  }
  require(n_floor >= 1, "PlannerConstants: n_floor must be >= 1");
}

std::uint64_t tolerant_ceil(double x) {
  require(std::isfinite(x), "tolerant_ceil: non-finite argument");
  if (x <= 1.0) return 1;
  const double c = std::ceil(x * (1.0 - 1e-12));
  if (c >= 1.8e19) throw NumericError("tolerant_ceil: batch size overflows");
  return static_cast<std::uint64_t>(c);
}

namespace {

void check_alpha(double alpha, const char* where) {
  if (!(alpha >= 1.0 && alpha <= 2.0)) {
    throw ContractViolation(std::string(where) + ": alpha must lie in [1, 2]");
  }
}

}  // namespace

SamplePlan plan_sample_sizes(double eps, double alpha, const PlannerConstants& c) {
  require(eps > 0.0 && std::isfinite(eps), "plan_sample_sizes: eps must be positive");
  check_alpha(alpha, "plan_sample_sizes");
  c.validate();
  SamplePlan p;
  p.n_g = tolerant_ceil(c.c_g * std::pow(eps, -2.0 / alpha));
  p.n_h = tolerant_ceil(c.c_h * std::pow(eps, -1.0 / alpha));
  p.eps_eig = c.c_eig * std::pow(eps, 1.0 / alpha);
  p.eps_ls = c.c_ls * std::pow(eps, 1.0 / alpha);
  return p;
}

SamplePlan plan_tolerances(double eps, double alpha, const PlannerConstants& c) {
  require(eps > 0.0 && std::isfinite(eps), "plan_tolerances: eps must be positive");
  check_alpha(alpha, "plan_tolerances");
  c.validate();
  SamplePlan p;
  p.eps_eig = c.c_eig * std::pow(eps, 1.0 / alpha);
  p.eps_ls = c.c_ls * std::pow(eps, 1.0 / alpha);
  return p;
}

std::uint64_t predicted_iterations(double eps, double alpha, const PlannerConstants& c) {
  require(eps > 0.0, "predicted_iterations: eps must be positive");
  check_alpha(alpha, "predicted_iterations");
  c.validate();
  if (eps >= 1.0) return tolerant_ceil(c.c_iter);
  double v = 0.0;
  if (alpha < 1.5) {
    v = std::pow(eps, 1.0 - 3.0 / (2.0 * alpha));
  } else if (alpha == 1.5) {
    v = std::log(1.0 / eps);
  } else {
    // log log(1/eps) is negative for eps > 1/e; the floor below covers it.
    v = std::log(std::log(1.0 / eps));
  }
  if (!(v > 0.0)) return 1;
  return tolerant_ceil(c.c_iter * v);
}

double vr_exponent(double alpha) {
  if (!(alpha >= 1.0 && alpha < 1.5)) {
    throw ContractViolation("variance reduction requires alpha in [1, 1.5)");
  }
  return 4.0 / (3.0 - 2.0 * alpha);
}

std::uint64_t vr_checkpoint_batch(std::int64_t anchor, double alpha, const PlannerConstants& c) {
  require(anchor >= 1, "vr_checkpoint_batch: anchor must be >= 1");
  return tolerant_ceil(c.c_vr * std::pow(static_cast<double>(anchor), vr_exponent(alpha)));
}

std::uint64_t vr_schedule(std::int64_t k, std::int64_t k_c, double d_prev_norm, double alpha,
                          const PlannerConstants& c) {
  require(k >= 1, "vr_schedule: k must be >= 1");
  require(k_c >= 1, "vr_schedule: K_C must be >= 1");
  require(d_prev_norm >= 0.0 && std::isfinite(d_prev_norm),
          "vr_schedule: d_prev_norm must be finite and >= 0");
  c.validate();
  const double e = vr_exponent(alpha);
  if (k % k_c == 0) return vr_checkpoint_batch(k, alpha, c);
  const std::int64_t anchor = std::max<std::int64_t>((k / k_c) * k_c, 1);
  const double n = c.c_vr * d_prev_norm * d_prev_norm * static_cast<double>(k_c) *
                   std::pow(static_cast<double>(anchor), e);
  if (n <= static_cast<double>(c.n_floor)) return c.n_floor;
  return std::max(c.n_floor, tolerant_ceil(n));
}

std::int64_t vr_checkpoint_period(std::uint64_t iterations, double alpha,
                                  const PlannerConstants& c) {
  vr_exponent(alpha);
  const double k = static_cast<double>(std::max<std::uint64_t>(iterations, 1));
  return static_cast<std::int64_t>(tolerant_ceil(c.c_kc * std::pow(k, alpha / (3.0 - 2.0 * alpha))));
}

}  // namespace homodescent
