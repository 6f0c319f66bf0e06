#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

#include "homodescent/lanczos.hpp"
#include "homodescent/linear_map.hpp"

namespace homodescent {

/// |t| below this marks the hard case: the leftmost eigenvector carries no
/// information about the gradient and d = v / t is undefined.
inline constexpr double kDegenerateT = 1e-8;

/// Leftmost eigenpair of A(delta) = [H g; g' -delta] in primal-dual form.
struct HqmSolution {
  double lambda = 0.0;  // lambda_min(A(delta))
  double theta = 0.0;   // dual variable, -lambda
  Vector v;
  double t = 0.0;       // sign fixed so that t >= 0
  Vector d;             // v / t; empty when t_is_degenerate
  bool t_is_degenerate = false;
  int eigen_iters = 0;
  double residual = 0.0;
  bool converged = false;
};

HqmSolution solve_hqm(const LinearMap& h, const Vector& g, double delta, double tol,
                      std::uint64_t seed);

/// Optimality residuals of a computed solution:
///   stationarity = ||(H + theta I) d + g||
///   curve        = |g.d - (delta - theta)|
///   norm_dev     = | ||[v; t]|| - 1 |
/// The first two are empty for degenerate t.
struct KktResiduals {
  std::optional<double> stationarity;
  std::optional<double> curve;
  double norm_dev = 0.0;
};

KktResiduals kkt_residuals(const HqmSolution& sol, const LinearMap& h, const Vector& g,
                           double delta);

struct Perturbation {
  Vector g_prime;
  bool perturbed = false;
  double projection_norm = 0.0;  // ||P_min(g)|| before perturbation
  int eigen_iters = 0;
  int eigen_solves = 0;
};

/// Moves g by eps_eig along its projection onto the minimal eigenspace of H
/// whenever that projection is shorter than eps_eig. A vanishing projection is
/// replaced by a seeded random unit direction inside the eigenspace.
Perturbation perturb_gradient(const LinearMap& h, const Vector& g, double eps_eig,
                              std::uint64_t seed, double tol = 1e-10);

/// Bisection branch. kAsPrinted moves the left end when h >= 0, which loses
/// the root because h is non-decreasing; it exists for mutation testing only.
enum class BranchRule { kMonotone, kAsPrinted };

struct LinesearchConfig {
  double c_e = 4.0 / 3.0;
  double eps_ls = 1e-4;
  double eps_eig = 1e-4;
  double delta_lo = -1.0;
  double delta_hi = 1.0;
  int max_bisections = 200;
  int max_expansions = 40;
  // Residual tolerance of each eigensolve. <= 0 picks one tight enough that
  // the error in h stays well below eps_ls.
  double eig_tol = 0.0;
  BranchRule branch = BranchRule::kMonotone;

  void validate() const;
  double eigen_tolerance() const {
    return eig_tol > 0.0 ? eig_tol : std::max(1e-13, 1e-3 * std::min(eps_eig, eps_ls));
  }
};

struct LinesearchResult {
  double delta = 0.0;
  HqmSolution solution;
  int bisections = 0;
  bool perturbed = false;
  double h_value = 0.0;  // theta - c_e ||d|| at delta
  bool met_tolerance = false;
  Vector g_prime;
  int eigen_solves = 0;
  int eigen_iters = 0;
  int expansions = 0;
};

class LinesearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bisection over delta for a root of h(delta) = theta(delta) - c_e ||d(delta)||
/// on the perturbed gradient. Stops as soon as |h| <= eps_ls. Once the bracket
/// is narrower than eps_ls without meeting that, probes alternate between the
/// secant point and the midpoint.
LinesearchResult adaptive_delta_search(const LinearMap& h, const Vector& g,
                                       const LinesearchConfig& cfg, std::uint64_t seed);

/// Search interval containing the root when ||g|| <= c_g, ||H|| <= c_h and the
/// gradient projection onto the minimal eigenspace is at least eps_eig.
std::pair<double, double> default_bracket(double c_g, double c_h, double c_e, double eps_eig);

/// Number of halvings to shrink `width` below eps.
int bisection_budget(double width, double eps);

}  // namespace homodescent
