#include "homodescent/chain_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "homodescent/rng.hpp"

namespace homodescent {

void ChainMdp::validate() const {
  require(n_states >= 1 && n_actions >= 1, "ChainMdp: need at least one state and action");
  const auto sa = static_cast<std::size_t>(n_states) * n_actions;
  require(transition.size() == sa * n_states, "ChainMdp: transition table has the wrong size");
  require(reward.size() == sa, "ChainMdp: reward table has the wrong size");
  require(rho.size() == static_cast<std::size_t>(n_states), "ChainMdp: rho has the wrong size");
  require(gamma > 0.0 && gamma < 1.0, "ChainMdp: gamma must lie in (0,1)");
  require(horizon >= 1, "ChainMdp: horizon must be >= 1");
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double row = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        require(p(s, a, s2) >= 0.0, "ChainMdp: negative transition probability");
        row += p(s, a, s2);
      }
      require(std::abs(row - 1.0) <= 1e-12,
              "ChainMdp: transition row (" + std::to_string(s) + "," + std::to_string(a) +
                  ") is not stochastic");
      require(r(s, a) >= 0.0 && r(s, a) <= 1.0, "ChainMdp: rewards must lie in [0,1]");
    }
  }
  double total = 0.0;
  for (double w : rho) {
    require(w >= 0.0, "ChainMdp: rho has a negative entry");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-12, "ChainMdp: rho must sum to one");
}

ChainMdp make_chain_mdp(int n_states, double slip, double gamma, int horizon, double lure) {
  require(n_states >= 2, "make_chain_mdp: need at least two states");
  require(slip >= 0.0 && slip <= 1.0, "make_chain_mdp: slip must lie in [0,1]");
  ChainMdp m;
  m.n_states = n_states;
  m.n_actions = 2;
  m.gamma = gamma;
  m.horizon = horizon;
  m.transition.assign(static_cast<std::size_t>(n_states) * 2 * n_states, 0.0);
  m.reward.assign(static_cast<std::size_t>(n_states) * 2, 0.0);
  m.rho.assign(n_states, 0.0);
  m.rho[0] = 1.0;
  auto at = [&](int s, int a, int s2) -> double& {
    return m.transition[(static_cast<std::size_t>(s) * 2 + a) * n_states + s2];
  };
  for (int s = 0; s < n_states; ++s) {
    const int left = std::max(s - 1, 0);
    const int right = std::min(s + 1, n_states - 1);
    at(s, 0, left) += 1.0 - slip;
    at(s, 0, right) += slip;
    at(s, 1, right) += 1.0 - slip;
    at(s, 1, left) += slip;
  }
  m.reward[static_cast<std::size_t>(n_states - 1) * 2 + 1] = 1.0;
  m.reward[0] = lure;
  m.validate();
  return m;
}

double optimal_return(const ChainMdp& mdp, double tol) {
  mdp.validate();
  Vector v = Vector::Zero(mdp.n_states);
  for (int it = 0; it < 100000; ++it) {
    Vector next(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.n_actions; ++a) {
        double q = mdp.r(s, a);
        for (int s2 = 0; s2 < mdp.n_states; ++s2) q += mdp.gamma * mdp.p(s, a, s2) * v[s2];
        best = std::max(best, q);
      }
      next[s] = best;
    }
    const double change = (next - v).lpNorm<Eigen::Infinity>();
    v = next;
    if (change <= tol * (1.0 - mdp.gamma)) break;
  }
  return Eigen::Map<const Vector>(mdp.rho.data(), mdp.n_states).dot(v);
}

namespace {

// Discounted value of a stationary policy given as an S x A probability matrix.
Vector policy_values(const ChainMdp& mdp, const Matrix& pi) {
  const int S = mdp.n_states;
  Matrix p = Matrix::Zero(S, S);
  Vector r = Vector::Zero(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      r[s] += pi(s, a) * mdp.r(s, a);
      for (int s2 = 0; s2 < S; ++s2) p(s, s2) += pi(s, a) * mdp.p(s, a, s2);
    }
  }
  const Matrix m = Matrix::Identity(S, S) - mdp.gamma * p;
  return m.partialPivLu().solve(r);
}

}  // namespace

double deterministic_policy_return(const ChainMdp& mdp, const std::vector<int>& actions) {
  require(actions.size() == static_cast<std::size_t>(mdp.n_states),
          "deterministic_policy_return: one action per state required");
  Matrix pi = Matrix::Zero(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    require(actions[s] >= 0 && actions[s] < mdp.n_actions,
            "deterministic_policy_return: action out of range");
    pi(s, actions[s]) = 1.0;
  }
  return Eigen::Map<const Vector>(mdp.rho.data(), mdp.n_states).dot(policy_values(mdp, pi));
}

// ---------------------------------------------------------------------------

namespace {

// Forward-mode dual number; d carries the directional derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit on purpose
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
double primal(double x) { return x; }
double primal(Dual x) { return x.v; }
using std::exp;

template <class T>
std::vector<T> softmax_policy(const ChainMdp& m, const std::vector<T>& theta, double temp) {
  std::vector<T> pi(theta.size());
  for (int s = 0; s < m.n_states; ++s) {
    const std::size_t base = static_cast<std::size_t>(s) * m.n_actions;
    double mx = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < m.n_actions; ++a) mx = std::max(mx, primal(theta[base + a]));
    T total = 0.0;
    for (int a = 0; a < m.n_actions; ++a) {
      pi[base + a] = exp((theta[base + a] - T(mx)) / T(temp));
      total += pi[base + a];
    }
    for (int a = 0; a < m.n_actions; ++a) pi[base + a] = pi[base + a] / total;
  }
  return pi;
}

template <class T>
struct DpResult {
  T j = 0.0;
  std::vector<T> grad;  // dJ_H / dtheta
};

// Truncated return and its gradient:
//   dJ/dtheta_{s,b} = (1/temp) sum_t gamma^t mu_t(s) pi(b|s) (Q_t(s,b) - W_t(s)).
template <class T>
DpResult<T> truncated_dp(const ChainMdp& m, const std::vector<T>& theta, double temp) {
  const int S = m.n_states;
  const int A = m.n_actions;
  const int H = m.horizon;
  const std::vector<T> pi = softmax_policy(m, theta, temp);

  std::vector<T> mu(static_cast<std::size_t>(H) * S, T(0.0));
  for (int s = 0; s < S; ++s) mu[s] = m.rho[s];
  for (int t = 0; t + 1 < H; ++t) {
    for (int s = 0; s < S; ++s) {
      const T ms = mu[static_cast<std::size_t>(t) * S + s];
      for (int a = 0; a < A; ++a) {
        const T w = ms * pi[static_cast<std::size_t>(s) * A + a];
        for (int s2 = 0; s2 < S; ++s2) {
          const double pr = m.p(s, a, s2);
          if (pr != 0.0) mu[static_cast<std::size_t>(t + 1) * S + s2] += w * T(pr);
        }
      }
    }
  }

  DpResult<T> out;
  out.grad.assign(theta.size(), T(0.0));
  std::vector<T> w_next(S, T(0.0));
  std::vector<T> w(S);
  std::vector<T> q(static_cast<std::size_t>(S) * A);
  for (int t = H - 1; t >= 0; --t) {
    const double disc = std::pow(m.gamma, t);
    for (int s = 0; s < S; ++s) {
      T ws = 0.0;
      for (int a = 0; a < A; ++a) {
        T qa = m.r(s, a);
        for (int s2 = 0; s2 < S; ++s2) {
          const double pr = m.p(s, a, s2);
          if (pr != 0.0) qa += T(m.gamma * pr) * w_next[s2];
        }
        q[static_cast<std::size_t>(s) * A + a] = qa;
        ws += pi[static_cast<std::size_t>(s) * A + a] * qa;
      }
      w[s] = ws;
      const T scale = T(disc / temp) * mu[static_cast<std::size_t>(t) * S + s];
      for (int a = 0; a < A; ++a) {
        const std::size_t i = static_cast<std::size_t>(s) * A + a;
        out.grad[i] += scale * pi[i] * (q[i] - ws);
      }
    }
    w_next = w;
  }
  for (int s = 0; s < S; ++s) out.j += T(m.rho[s]) * w_next[s];
  return out;
}

std::vector<double> to_std(const Vector& x) { return {x.data(), x.data() + x.size()}; }

}  // namespace

ChainMdpObjective::ChainMdpObjective(ChainMdp mdp, double temperature, std::uint64_t seed)
    : Problem(ProblemInfo{}), mdp_(std::move(mdp)), temperature_(temperature) {
  mdp_.validate();
  require(temperature > 0.0 && std::isfinite(temperature),
          "make_chain_mdp_policy: temperature must be positive");
  j_star_ = homodescent::optimal_return(mdp_);
  info_.name = "chain_mdp";
  info_.alpha = 1.0;
  info_.maximization = true;
  info_.lip_h = estimate_lip_h(*this, Vector::Zero(dim()), 5.0, 64, seed);
}

double ChainMdpObjective::value(const Vector& theta) const { return -truncated_return(theta); }

double ChainMdpObjective::truncated_return(const Vector& theta) const {
  require(theta.size() == dim(), "ChainMdpObjective: length mismatch");
  return truncated_dp(mdp_, to_std(theta), temperature_).j;
}

Vector ChainMdpObjective::gradient(const Vector& theta) const {
  require(theta.size() == dim(), "ChainMdpObjective: length mismatch");
  const auto dp = truncated_dp(mdp_, to_std(theta), temperature_);
  Vector g(dim());
  for (Index i = 0; i < dim(); ++i) g[i] = -dp.grad[static_cast<std::size_t>(i)];
  return g;
}

LinearMap ChainMdpObjective::hessian_map(const Vector& theta) const {
  require(theta.size() == dim(), "ChainMdpObjective: length mismatch");
  const Vector th = theta;
  const ChainMdp mdp = mdp_;
  const double temp = temperature_;
  return LinearMap(dim(), [th, mdp, temp](const Vector& u) -> Vector {
    std::vector<Dual> x(static_cast<std::size_t>(th.size()));
    for (Index i = 0; i < th.size(); ++i) x[static_cast<std::size_t>(i)] = Dual(th[i], u[i]);
    const auto dp = truncated_dp(mdp, x, temp);
    Vector out(th.size());
    for (Index i = 0; i < th.size(); ++i) out[i] = -dp.grad[static_cast<std::size_t>(i)].d;
    return out;
  });
}

Vector ChainMdpObjective::default_start(std::uint64_t) const { return Vector::Zero(dim()); }

Matrix ChainMdpObjective::policy(const Vector& theta) const {
  require(theta.size() == dim(), "ChainMdpObjective: length mismatch");
  const auto pi = softmax_policy(mdp_, to_std(theta), temperature_);
  Matrix out(mdp_.n_states, mdp_.n_actions);
  for (int s = 0; s < mdp_.n_states; ++s) {
    for (int a = 0; a < mdp_.n_actions; ++a) {
      out(s, a) = pi[static_cast<std::size_t>(s) * mdp_.n_actions + a];
    }
  }
  return out;
}

double ChainMdpObjective::infinite_horizon_return(const Vector& theta) const {
  const Vector v = policy_values(mdp_, policy(theta));
  return Eigen::Map<const Vector>(mdp_.rho.data(), mdp_.n_states).dot(v);
}

Matrix ChainMdpObjective::stage_values(const Vector& theta) const {
  const Matrix pi = policy(theta);
  const int S = mdp_.n_states;
  const int H = mdp_.horizon;
  Matrix w = Matrix::Zero(H + 1, S);
  for (int t = H - 1; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double ws = 0.0;
      for (int a = 0; a < mdp_.n_actions; ++a) {
        double q = mdp_.r(s, a);
        for (int s2 = 0; s2 < S; ++s2) q += mdp_.gamma * mdp_.p(s, a, s2) * w(t + 1, s2);
        ws += pi(s, a) * q;
      }
      w(t, s) = ws;
    }
  }
  return w;
}

// ---------------------------------------------------------------------------

ChainMdpOracle::ChainMdpOracle(std::shared_ptr<const ChainMdpObjective> objective,
                               bool baseline, std::uint64_t seed)
    : objective_(std::move(objective)), baseline_(baseline), seed_(seed) {
  require(objective_ != nullptr, "ChainMdpOracle: null objective");
}

namespace {

int draw_index(const double* probs, int n, std::uniform_real_distribution<double>& u, Rng& rng) {
  const double x = u(rng);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (x < acc) return i;
  }
  // Round-off at the top end: fall back to the last outcome with mass.
  for (int i = n - 1; i >= 0; --i) {
    if (probs[i] > 0.0) return i;
  }
  return n - 1;
}

struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> coef;  // Psi_h, minus the baseline when enabled
};

class TrajectorySampler {
 public:
  TrajectorySampler(const ChainMdpObjective& obj, const Vector& theta, bool baseline)
      : mdp_(obj.mdp()), pi_(obj.policy(theta)) {
    if (baseline) w_ = obj.stage_values(theta);
    rho_ = mdp_.rho;
    row_.resize(static_cast<std::size_t>(mdp_.n_states));
  }

  Trajectory sample(Rng& rng) {
    const int H = mdp_.horizon;
    Trajectory tr;
    tr.states.resize(H);
    tr.actions.resize(H);
    tr.coef.assign(H, 0.0);
    std::vector<double> rewards(H);
    int s = draw_index(rho_.data(), mdp_.n_states, u_, rng);
    for (int h = 0; h < H; ++h) {
      const Vector pis = pi_.row(s).transpose();
      const int a = draw_index(pis.data(), mdp_.n_actions, u_, rng);
      tr.states[h] = s;
      tr.actions[h] = a;
      rewards[h] = mdp_.r(s, a);
      for (int s2 = 0; s2 < mdp_.n_states; ++s2) row_[s2] = mdp_.p(s, a, s2);
      s = draw_index(row_.data(), mdp_.n_states, u_, rng);
    }
    double togo = 0.0;
    for (int h = H - 1; h >= 0; --h) {
      const double disc = std::pow(mdp_.gamma, h);
      togo += disc * rewards[h];
      tr.coef[h] = togo;
      if (w_.size() > 0) tr.coef[h] -= disc * w_(h, tr.states[h]);
    }
    return tr;
  }

  const Matrix& pi() const { return pi_; }

 private:
  const ChainMdp& mdp_;
  Matrix pi_;
  Matrix w_;
  std::vector<double> rho_;
  std::vector<double> row_;
  std::uniform_real_distribution<double> u_{0.0, 1.0};
};

// grad log pi(a|s) lives in block s: (e_a - pi_s) / temp.
void add_score(Vector& acc, const Matrix& pi, int s, int a, double scale, double temp) {
  const int A = static_cast<int>(pi.cols());
  for (int b = 0; b < A; ++b) {
    acc[static_cast<Index>(s) * A + b] += scale * ((b == a ? 1.0 : 0.0) - pi(s, b)) / temp;
  }
}

}  // namespace

Vector ChainMdpOracle::gradient_batch(const Vector& theta, std::uint64_t n,
                                      std::uint64_t seed) const {
  require(theta.size() == dim(), "ChainMdpOracle: length mismatch");
  TrajectorySampler sampler(*objective_, theta, baseline_);
  const double temp = objective_->temperature();
  Rng rng(derive_seed(seed_, seed, StreamKind::kOracle, 5));
  Vector acc = Vector::Zero(dim());
  for (std::uint64_t i = 0; i < n; ++i) {
    const Trajectory tr = sampler.sample(rng);
    Vector gi = Vector::Zero(dim());
    for (std::size_t h = 0; h < tr.states.size(); ++h) {
      add_score(gi, sampler.pi(), tr.states[h], tr.actions[h], tr.coef[h], temp);
    }
    if (!gi.allFinite()) {
      throw NumericError("ChainMdpOracle: non-finite gradient at sample " + std::to_string(i));
    }
    acc += gi;
  }
  return -acc / static_cast<double>(n);
}

LinearMap ChainMdpOracle::hessian_batch(const Vector& theta, std::uint64_t n,
                                        std::uint64_t seed) const {
  require(theta.size() == dim(), "ChainMdpOracle: length mismatch");
  TrajectorySampler sampler(*objective_, theta, baseline_);
  const double temp = objective_->temperature();
  const int S = objective_->mdp().n_states;
  const int A = objective_->mdp().n_actions;
  Rng rng(derive_seed(seed_, seed, StreamKind::kOracle, 6));
  Matrix g(dim(), static_cast<Index>(n));
  Matrix l(dim(), static_cast<Index>(n));
  Vector c = Vector::Zero(S);
  for (std::uint64_t i = 0; i < n; ++i) {
    const Trajectory tr = sampler.sample(rng);
    Vector gi = Vector::Zero(dim());
    Vector li = Vector::Zero(dim());
    for (std::size_t h = 0; h < tr.states.size(); ++h) {
      add_score(gi, sampler.pi(), tr.states[h], tr.actions[h], tr.coef[h], temp);
      add_score(li, sampler.pi(), tr.states[h], tr.actions[h], 1.0, temp);
      c[tr.states[h]] += tr.coef[h];
    }
    if (!gi.allFinite() || !li.allFinite()) {
      throw NumericError("ChainMdpOracle: non-finite Hessian term at sample " +
                         std::to_string(i));
    }
    g.col(static_cast<Index>(i)) = gi;
    l.col(static_cast<Index>(i)) = li;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const Matrix pi = sampler.pi();
  // hess log pi(a|s) = -(diag(pi_s) - pi_s pi_s') / temp^2, independent of a.
  return LinearMap(dim(), [g, l, c, pi, inv_n, temp, S, A](const Vector& u) -> Vector {
    Vector m = 0.5 * (g * (l.transpose() * u) + l * (g.transpose() * u));
    for (int s = 0; s < S; ++s) {
      const Vector us = u.segment(static_cast<Index>(s) * A, A);
      const Vector ps = pi.row(s).transpose();
      const Vector fs = ps.cwiseProduct(us) - ps * ps.dot(us);
      m.segment(static_cast<Index>(s) * A, A) -= (c[s] / (temp * temp)) * fs;
    }
    return -inv_n * m;
  });
}

ChainMdpPolicy make_chain_mdp_policy(const ChainMdp& mdp, int horizon, double temperature,
                                     bool baseline, std::uint64_t seed) {
  require(horizon >= 1, "make_chain_mdp_policy: horizon must be >= 1");
  ChainMdp m = mdp;
  m.horizon = horizon;
  ChainMdpPolicy out;
  out.objective = std::make_shared<ChainMdpObjective>(std::move(m), temperature, seed);
  out.oracle = std::make_shared<ChainMdpOracle>(out.objective, baseline, seed);
  return out;
}

double estimate_lip_h(const Problem& problem, const Vector& center, double radius, int pairs,
                      std::uint64_t seed) {
  require(pairs >= 1 && radius > 0.0, "estimate_lip_h: bad arguments");
  require(center.size() == problem.dim(), "estimate_lip_h: length mismatch");
  Rng rng(derive_seed(seed, 0x1b));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Index n = problem.dim();
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Vector x =
        center + radius * std::pow(u(rng), 1.0 / static_cast<double>(n)) * random_unit(n, rng);
    const double step = 0.05 * radius;
    const Vector y = x + step * random_unit(n, rng);
    Matrix diff = dense_materialize(problem.hessian_map(x)) -
                  dense_materialize(problem.hessian_map(y));
    diff = 0.5 * (diff + diff.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
    worst = std::max(worst, es.eigenvalues().cwiseAbs().maxCoeff() / step);
  }
  return worst;
}

}  // namespace homodescent
