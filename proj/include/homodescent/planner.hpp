#pragma once

#include <cstdint>

namespace homodescent {

/// Multipliers in front of the order-of-magnitude schedules. All default to 1.
struct PlannerConstants {
  double c_g = 1.0;     // gradient batch
  double c_h = 1.0;     // Hessian batch
  double c_eig = 1.0;   // perturbation threshold
  double c_ls = 1.0;    // line-search tolerance
  double c_iter = 1.0;  // iteration count
  double c_vr = 1.0;    // variance-reduced gradient batch
  double c_kc = 1.0;    // checkpoint period
  std::uint64_t n_floor = 4;

  void validate() const;
};

struct SamplePlan {
  std::uint64_t n_g = 1;
  std::uint64_t n_h = 1;
  double eps_eig = 1.0;
  double eps_ls = 1.0;
};

/// n_g = ceil(c_g eps^(-2/alpha)), n_H = ceil(c_h eps^(-1/alpha)),
/// eps_eig = c_eig eps^(1/alpha), eps_ls = c_ls eps^(1/alpha).
SamplePlan plan_sample_sizes(double eps, double alpha, const PlannerConstants& c = {});

/// Tolerances only, batch sizes left at 1. Deterministic runs use this, so a
/// tiny eps does not overflow the batch formulas.
SamplePlan plan_tolerances(double eps, double alpha, const PlannerConstants& c = {});

/// Iteration budget: c eps^(1 - 3/(2 alpha)) for alpha < 3/2, c log(1/eps) at
/// 3/2, c log log(1/eps) above. eps >= 1 returns ceil(c).
std::uint64_t predicted_iterations(double eps, double alpha, const PlannerConstants& c = {});

/// Exponent 4 / (3 - 2 alpha) of the variance-reduced batch growth.
double vr_exponent(double alpha);

/// Batch for iteration k of the variance-reduced method. Checkpoints
/// (k mod k_c == 0) get ceil(c_vr k^e); other steps
/// max(n_floor, ceil(c_vr d_prev_norm^2 k_c anchor^e)) with
/// anchor = max(floor(k / k_c) k_c, 1).
std::uint64_t vr_schedule(std::int64_t k, std::int64_t k_c, double d_prev_norm, double alpha,
                          const PlannerConstants& c = {});

/// Fresh batch at a checkpoint whose window starts at `anchor` (>= 1).
std::uint64_t vr_checkpoint_batch(std::int64_t anchor, double alpha,
                                  const PlannerConstants& c = {});

/// Checkpoint period ceil(c_kc K^(alpha / (3 - 2 alpha))).
std::int64_t vr_checkpoint_period(std::uint64_t iterations, double alpha,
                                  const PlannerConstants& c = {});

/// ceil that ignores representation noise just above an integer
/// (1e-2^-2 evaluates to 10000.000000000002).
std::uint64_t tolerant_ceil(double x);

}  // namespace homodescent
