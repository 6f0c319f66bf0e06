#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "homodescent/hqm.hpp"
#include "homodescent/oracle.hpp"
#include "homodescent/planner.hpp"

namespace homodescent {

enum class Mode { kShsodm, kVrShsodm, kDeterministic, kSgd };

std::string to_string(Mode m);
/// Accepts shsodm, vr_shsodm (or vr), deterministic, sgd.
Mode parse_mode(const std::string& s);

struct RunConfig {
  double target_eps = 1e-2;
  double alpha = 2.0;
  std::int64_t max_iters = 0;  // 0: planner's predicted_iterations
  Mode mode = Mode::kShsodm;
  PlannerConstants constants;
  std::int64_t k_c = 0;  // 0: planner's checkpoint period
  std::optional<double> c_e;
  std::uint64_t seed = 0;
  std::uint64_t sample_budget = 0;  // 0: unlimited
  bool early_exit = true;           // stop once the gap to a known f* is <= target_eps
  bool record_wall_time = false;    // wall_ns stays 0 otherwise, keeping traces reproducible
  BranchRule branch = BranchRule::kMonotone;
  double sgd_lr = 0.0;
  std::uint64_t sgd_batch = 1;

  void validate() const;
};

/// One record per iterate. Row k = 0 describes the starting point; row k >= 1
/// describes x_k together with the step that produced it.
struct IterateTrace {
  std::int64_t k = 0;
  double f_value = 0.0;  // F(x_k), or the return for maximisation problems
  double f_gap = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = 0.0;  // exact ||grad F(x_k)||
  double delta = 0.0;
  double theta = 0.0;
  double d_norm = 0.0;
  int ls_bisections = 0;
  int eigen_iters = 0;
  int eigen_solves = 0;
  bool perturbed = false;
  std::uint64_t n_g = 0;  // gradient samples consumed by this step
  std::uint64_t n_h = 0;  // Hessian samples consumed by this step
  std::uint64_t cum_samples = 0;
  std::uint64_t cum_matvecs = 0;
  std::int64_t wall_ns = 0;
};

enum class RunStatus { kReachedEps, kBudgetExhausted, kError };
std::string to_string(RunStatus s);

struct RunResult {
  Vector final_x;
  std::vector<IterateTrace> trace;
  RunStatus status = RunStatus::kBudgetExhausted;
  std::string message;
  std::uint64_t total_samples = 0;
  std::uint64_t total_matvecs = 0;
  bool gap_is_proxy = false;
  SamplePlan plan;
  double c_e = 0.0;
  std::int64_t iterations_planned = 0;
};

/// Called after every record with the new iterate; returning true stops the run.
using IterationObserver = std::function<bool(const IterateTrace&, const Vector&)>;

/// C_e = (L_H + 4) / 3 from the problem's level-set constant, or the override.
double resolve_c_e(const StochasticOracle& oracle, const RunConfig& cfg);

/// Direction from an estimated (H, g): perturbation, bracket and delta search.
/// The bracket uses ||g|| + eps_eig and a padded Lanczos estimate of ||H||.
LinesearchResult solve_direction(const LinearMap& h, const Vector& g, double eps_eig,
                                 double eps_ls, double c_e, BranchRule branch,
                                 std::uint64_t seed);

struct StepOutcome {
  Vector x_next;
  IterateTrace record;
  std::uint64_t matvecs = 0;  // Hessian-map applications in this step
};

/// One iteration of the stochastic method at iteration index k >= 1: batch
/// estimates, direction search, unit step x + d (d solves (H + theta I) d = -g').
/// Fills every record field except the cumulative columns and wall time.
StepOutcome shsodm_step(const Vector& x, const StochasticOracle& oracle, const RunConfig& cfg,
                        std::int64_t k);

RunResult run_shsodm(const Vector& x0, const StochasticOracle& oracle, const RunConfig& cfg,
                     const IterationObserver& observer = {});

RunResult run_vr_shsodm(const Vector& x0, const StochasticOracle& oracle, const RunConfig& cfg,
                        const IterationObserver& observer = {});

Vector sgd_step(const Vector& x, const StochasticOracle& oracle, double lr, std::uint64_t n,
                std::uint64_t seed, SampleCounter* counter = nullptr);

/// Fixed-step mini-batch SGD for max_iters steps (early exit as configured).
RunResult run_sgd(const Vector& x0, const StochasticOracle& oracle, const RunConfig& cfg,
                  const IterationObserver& observer = {});

/// Dispatches on cfg.mode.
RunResult run(const Vector& x0, const StochasticOracle& oracle, const RunConfig& cfg,
              const IterationObserver& observer = {});

}  // namespace homodescent
