#include "homodescent/rate_fit.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace homodescent {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::kSublinear:
      return "sublinear";
    case Regime::kLinear:
      return "linear";
    case Regime::kSuperlinear:
      return "superlinear";
  }
  return "unknown";
}

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "least_squares: length mismatch");
  require(x.size() >= 2, "least_squares: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, "least_squares: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ssr += e * e;
  }
  if (syy <= 1e-300 || ssr <= 1e-24 * std::max(syy, 1.0)) {
    f.r_squared = 1.0;
  } else {
    f.r_squared = std::clamp(1.0 - ssr / syy, 0.0, 1.0);
  }
  return f;
}

namespace {

struct Window {
  std::vector<double> k;
  std::vector<double> gap;
  std::vector<std::string> warnings;
};

Window select(const std::vector<double>& k, const std::vector<double>& gap, long k_lo,
              long k_hi) {
  require(k.size() == gap.size(), "fit_convergence_order: length mismatch");
  require(k_lo <= k_hi, "fit_convergence_order: empty k range");
  Window w;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] < static_cast<double>(k_lo) || k[i] > static_cast<double>(k_hi)) continue;
    if (!(gap[i] > 0.0) || !std::isfinite(gap[i])) {
      w.warnings.push_back("non-positive gap at k=" + std::to_string(static_cast<long>(k[i])) +
                           "; range truncated");
      break;
    }
    w.k.push_back(k[i]);
    w.gap.push_back(gap[i]);
  }
  return w;
}

std::optional<RateFit> try_fit(const Window& w, Regime regime) {
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < w.k.size(); ++i) {
    switch (regime) {
      case Regime::kSublinear:
        if (w.k[i] < 1.0) continue;
        x.push_back(std::log(w.k[i]));
        y.push_back(std::log(w.gap[i]));
        break;
      case Regime::kLinear:
        x.push_back(w.k[i]);
        y.push_back(std::log(w.gap[i]));
        break;
      case Regime::kSuperlinear:
        if (!(w.gap[i] < 1.0)) continue;
        x.push_back(w.k[i]);
        y.push_back(std::log(-std::log(w.gap[i])));
        break;
    }
  }
  if (x.size() < 3) return std::nullopt;
  const LineFit lf = least_squares(x, y);
  RateFit f;
  f.exponent = lf.slope;
  f.intercept = lf.intercept;
  f.r_squared = lf.r_squared;
  f.regime_label = regime;
  f.warnings = w.warnings;
  f.k_range = {static_cast<long>(w.k.front()), static_cast<long>(w.k.back())};
  return f;
}

}  // namespace

RateFit fit_regime(const std::vector<double>& k, const std::vector<double>& gap, long k_lo,
                   long k_hi, Regime regime) {
  const Window w = select(k, gap, k_lo, k_hi);
  auto f = try_fit(w, regime);
  if (!f) {
    throw ContractViolation("fit_regime: fewer than three usable points for the " +
                            to_string(regime) + " fit");
  }
  return *f;
}

RateFit fit_convergence_order(const std::vector<double>& k, const std::vector<double>& gap,
                              long k_lo, long k_hi) {
  const Window w = select(k, gap, k_lo, k_hi);
  std::optional<RateFit> best;
  for (Regime r : {Regime::kSublinear, Regime::kLinear, Regime::kSuperlinear}) {
    auto f = try_fit(w, r);
    if (f && (!best || f->r_squared > best->r_squared)) best = f;
  }
  if (!best) {
    throw ContractViolation("fit_convergence_order: fewer than three usable points in range");
  }
  return *best;
}

RateFit fit_convergence_order(const std::vector<IterateTrace>& trace,
                              const std::string& gap_column, long k_lo, long k_hi) {
  std::vector<double> k;
  std::vector<double> gap;
  for (const auto& r : trace) {
    k.push_back(static_cast<double>(r.k));
    if (gap_column == "f_gap") {
      gap.push_back(r.f_gap);
    } else if (gap_column == "grad_norm") {
      gap.push_back(r.grad_norm);
    } else if (gap_column == "f_value") {
      gap.push_back(r.f_value);
    } else if (gap_column == "d_norm") {
      gap.push_back(r.d_norm);
    } else {
      throw ContractViolation("fit_convergence_order: unknown column '" + gap_column + "'");
    }
  }
  return fit_convergence_order(k, gap, k_lo, k_hi);
}

}  // namespace homodescent
