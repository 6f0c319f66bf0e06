#include "homodescent/hqm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "homodescent/rng.hpp"

namespace homodescent {

HqmSolution solve_hqm(const LinearMap& h, const Vector& g, double delta, double tol,
                      std::uint64_t seed) {
  require(g.size() == h.dim(), "solve_hqm: gradient length must match operator dimension");
  require(tol > 0.0, "solve_hqm: tol must be positive");
  const AugmentedMap aug(h, g, delta);
  const Index n = h.dim();

  const EigenPair pair =
      leftmost_eigenpair(aug.as_linear_map(), tol, static_cast<int>(n) + 1, seed);

  HqmSolution sol;
  sol.lambda = pair.value;
  sol.theta = -pair.value;
  sol.eigen_iters = pair.iterations;
  sol.residual = pair.residual;
  sol.converged = pair.converged;

  Vector z = pair.vector;
  double t = z[n];
  if (t < 0.0) {
    z = -z;
  } else if (t == 0.0) {
    // Fix the sign by the first clearly nonzero entry of v.
    for (Index i = 0; i < n; ++i) {
      if (std::abs(z[i]) > 1e-12) {
        if (z[i] < 0.0) z = -z;
        break;
      }
    }
  }
  sol.v = z.head(n);
  sol.t = z[n];
  sol.t_is_degenerate = std::abs(sol.t) < kDegenerateT;
  if (!sol.t_is_degenerate) sol.d = sol.v / sol.t;
  return sol;
}

KktResiduals kkt_residuals(const HqmSolution& sol, const LinearMap& h, const Vector& g,
                           double delta) {
  KktResiduals r;
  const double zn = std::sqrt(sol.v.squaredNorm() + sol.t * sol.t);
  r.norm_dev = std::abs(zn - 1.0);
  if (sol.t_is_degenerate || sol.d.size() == 0) return r;
  require(sol.d.size() == g.size(), "kkt_residuals: dimension mismatch");
  r.stationarity = (h.apply(sol.d) + sol.theta * sol.d + g).norm();
  r.curve = std::abs(g.dot(sol.d) - (delta - sol.theta));
  return r;
}

Perturbation perturb_gradient(const LinearMap& h, const Vector& g, double eps_eig,
                              std::uint64_t seed, double tol) {
  require(eps_eig > 0.0, "perturb_gradient: eps_eig must be positive");
  require(g.size() == h.dim(), "perturb_gradient: length mismatch");

  const MinEigenspace space = min_eigenspace(h, -1.0, tol, derive_seed(seed, 1));
  if (!space.converged) {
    throw ConvergenceError("perturb_gradient: minimal eigenspace solve did not converge");
  }
  Perturbation out;
  out.eigen_iters = space.iterations;
  out.eigen_solves = static_cast<int>(space.values.size()) + 1;

  const Vector coeffs = space.basis.transpose() * g;
  const Vector projection = space.basis * coeffs;
  out.projection_norm = projection.norm();
  if (out.projection_norm >= eps_eig) {
    out.g_prime = g;
    return out;
  }

  Vector direction;
  const double negligible = 64.0 * std::numeric_limits<double>::epsilon() * g.norm();
  if (out.projection_norm > negligible && out.projection_norm > 0.0) {
    direction = projection / out.projection_norm;
  } else {
    Rng rng(derive_seed(seed, 2));
    const Vector c = random_unit(space.basis.cols(), rng);
    direction = space.basis * c;
    direction.normalize();
    if (direction.dot(projection) < 0.0) direction = -direction;
  }
  // Slightly more than eps_eig so that a recomputed projection of g' still
  // clears the threshold.
  out.g_prime = g + eps_eig * (1.0 + 1e-7) * direction;
  out.perturbed = true;
  return out;
}

void LinesearchConfig::validate() const {
  require(c_e > 0.0, "LinesearchConfig: c_e must be positive");
  require(eps_ls > 0.0, "LinesearchConfig: eps_ls must be positive");
  require(eps_eig > 0.0, "LinesearchConfig: eps_eig must be positive");
  require(std::isfinite(delta_lo) && std::isfinite(delta_hi),
          "LinesearchConfig: bracket must be finite");
  require(delta_lo < delta_hi, "LinesearchConfig: delta_lo must be below delta_hi");
  require(max_bisections >= 1, "LinesearchConfig: max_bisections must be >= 1");
}

std::pair<double, double> default_bracket(double c_g, double c_h, double c_e,
                                          double eps_eig) {
  if (!(eps_eig > 0.0)) {
    throw ContractViolation("default_bracket: eps_eig must be positive");
  }
  require(c_g >= 0.0 && c_h >= 0.0 && c_e > 0.0, "default_bracket: constants must be positive");
  const double lo = -c_g * (c_h + std::sqrt(eps_eig)) / eps_eig - c_h;
  const double hi = c_e * c_g + c_h + 1.0;
  return {lo, hi};
}

int bisection_budget(double width, double eps) {
  require(width > 0.0 && eps > 0.0, "bisection_budget: positive arguments required");
  if (width <= eps) return 0;
  return static_cast<int>(std::ceil(std::log2(width / eps)));
}

namespace {

struct Probe {
  double delta = 0.0;
  double h = 0.0;
  HqmSolution sol;
};

}  // namespace

LinesearchResult adaptive_delta_search(const LinearMap& h, const Vector& g,
                                       const LinesearchConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  require(g.size() == h.dim(), "adaptive_delta_search: length mismatch");
  const double tol = cfg.eigen_tolerance();

  LinesearchResult out;
  const Perturbation pert =
      perturb_gradient(h, g, cfg.eps_eig, derive_seed(seed, 0x70), tol);
  out.perturbed = pert.perturbed;
  out.g_prime = pert.g_prime;
  out.eigen_iters += pert.eigen_iters;
  out.eigen_solves += pert.eigen_solves;
  const Vector& gp = out.g_prime;

  std::uint64_t probe_index = 0;
  auto evaluate = [&](double delta) {
    Probe p;
    p.delta = delta;
    p.sol = solve_hqm(h, gp, delta, tol, derive_seed(seed, 0x100 + probe_index++));
    out.eigen_iters += p.sol.eigen_iters;
    out.eigen_solves += 1;
    if (!p.sol.converged) {
      throw ConvergenceError("adaptive_delta_search: eigensolve at delta=" +
                             std::to_string(delta) + " did not converge (residual " +
                             std::to_string(p.sol.residual) + ")");
    }
    // A vanishing t means ||d|| is unbounded, so h is far below zero.
    p.h = p.sol.t_is_degenerate ? -std::numeric_limits<double>::infinity()
                                : p.sol.theta - cfg.c_e * p.sol.d.norm();
    return p;
  };
  auto finish = [&](const Probe& p, bool met) {
    if (p.sol.t_is_degenerate) {
      throw LinesearchError("adaptive_delta_search: degenerate t at the returned delta after "
                            "perturbation");
    }
    out.delta = p.delta;
    out.solution = p.sol;
    out.h_value = p.h;
    out.met_tolerance = met;
    return out;
  };

  Probe lo = evaluate(cfg.delta_lo);
  Probe hi = evaluate(cfg.delta_hi);

  // Expand until h(lo) <= 0 <= h(hi).
  while ((lo.h > 0.0 || hi.h < 0.0) && out.expansions < cfg.max_expansions) {
    const double width = hi.delta - lo.delta;
    ++out.expansions;
    if (lo.h > 0.0) {
      hi = lo;
      lo = evaluate(lo.delta - 2.0 * width);
    } else {
      lo = hi;
      hi = evaluate(hi.delta + 2.0 * width);
    }
  }
  if (lo.h > 0.0 || hi.h < 0.0) {
    throw LinesearchError("adaptive_delta_search: no sign change of h in the expanded bracket");
  }
  if (std::abs(lo.h) <= cfg.eps_ls) return finish(lo, true);
  if (std::abs(hi.h) <= cfg.eps_ls) return finish(hi, true);

  Probe last = hi;
  bool secant_turn = true;
  while (out.bisections < cfg.max_bisections) {
    const bool narrow = hi.delta - lo.delta < cfg.eps_ls;
    if (narrow && cfg.branch == BranchRule::kAsPrinted) break;

    double mid = 0.5 * (lo.delta + hi.delta);
    if (narrow && std::isfinite(lo.h)) {
      if (secant_turn) mid = lo.delta - lo.h * (hi.delta - lo.delta) / (hi.h - lo.h);
      secant_turn = !secant_turn;
    }
    ++out.bisections;
    last = evaluate(mid);
    if (std::abs(last.h) <= cfg.eps_ls) return finish(last, true);

    const bool h_nonneg = last.h >= 0.0;
    if (cfg.branch == BranchRule::kMonotone) {
      (h_nonneg ? hi : lo) = last;
    } else {
      (h_nonneg ? lo : hi) = last;
    }
    if (hi.delta <= lo.delta) break;
  }
  return finish(last, std::abs(last.h) <= cfg.eps_ls);
}

}  // namespace homodescent
