#pragma once

#include <string>
#include <utility>
#include <vector>

#include "homodescent/optimizer.hpp"

namespace homodescent {

enum class Regime { kSublinear, kLinear, kSuperlinear };
std::string to_string(Regime r);

/// Least-squares fit of one convergence regime:
///   sublinear    log gap      vs log k
///   linear       log gap      vs k
///   superlinear  log(-log gap) vs k   (points with gap < 1 only)
struct RateFit {
  double exponent = 0.0;  // slope of the chosen fit
  double intercept = 0.0;
  double r_squared = 0.0;
  std::pair<long, long> k_range{0, 0};  // inclusive, as actually used
  Regime regime_label = Regime::kSublinear;
  std::vector<std::string> warnings;
};

/// Fits all applicable regimes over k in [k_lo, k_hi] and returns the one with
/// the highest r^2 (ties resolved sublinear, linear, superlinear). The range is
/// cut at the first non-positive or non-finite gap, with a warning.
RateFit fit_convergence_order(const std::vector<double>& k, const std::vector<double>& gap,
                              long k_lo, long k_hi);

/// Same, reading `gap_column` (f_gap, grad_norm, f_value or d_norm) from a trace.
RateFit fit_convergence_order(const std::vector<IterateTrace>& trace,
                              const std::string& gap_column, long k_lo, long k_hi);

/// Fit of one specific regime, for callers that need a particular slope.
RateFit fit_regime(const std::vector<double>& k, const std::vector<double>& gap, long k_lo,
                   long k_hi, Regime regime);

/// Ordinary least squares y = a + b x. Returns (b, a, r^2).
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace homodescent
