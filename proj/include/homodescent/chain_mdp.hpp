#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "homodescent/oracle.hpp"
#include "homodescent/problems.hpp"

namespace homodescent {

/// Finite tabular MDP (S, A, P, r, gamma, rho). Despite the name it holds any
/// kernel; make_chain_mdp builds the chain instance.
struct ChainMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;  // P(s'|s,a) at [(s * n_actions + a) * n_states + s']
  std::vector<double> reward;      // r(s,a) at [s * n_actions + a]
  double gamma = 0.9;
  std::vector<double> rho;
  int horizon = 50;

  double p(int s, int a, int s2) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }

  /// Throws ContractViolation on non-stochastic rows, rewards outside [0,1],
  /// gamma outside (0,1) or a bad initial distribution.
  void validate() const;
};

/// n_states in a row; action 0 moves left, 1 moves right, and the move goes the
/// other way with probability slip. Reward 1 for pushing right in the last
/// state and `lure` for pushing left in the first. Episodes start in state 0.
ChainMdp make_chain_mdp(int n_states = 5, double slip = 0.1, double gamma = 0.9,
                        int horizon = 50, double lure = 0.2);

/// Optimal discounted return rho . V* by value iteration.
double optimal_return(const ChainMdp& mdp, double tol = 1e-12);

/// rho . V^pi for a deterministic policy (one action per state).
double deterministic_policy_return(const ChainMdp& mdp, const std::vector<int>& actions);

/// Softmax tabular policy objective F(theta) = -J_H(theta), where J_H is the
/// return truncated at the horizon. Gradient by dynamic programming, Hessian
/// products by forward-mode differentiation of that recursion.
class ChainMdpObjective : public Problem {
 public:
  ChainMdpObjective(ChainMdp mdp, double temperature, std::uint64_t seed = 0);

  Index dim() const override { return static_cast<Index>(mdp_.n_states) * mdp_.n_actions; }
  double value(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  LinearMap hessian_map(const Vector& theta) const override;
  Vector default_start(std::uint64_t seed) const override;

  const ChainMdp& mdp() const { return mdp_; }
  double temperature() const { return temperature_; }

  /// pi(a|s) as an n_states x n_actions matrix.
  Matrix policy(const Vector& theta) const;
  double truncated_return(const Vector& theta) const;
  double infinite_horizon_return(const Vector& theta) const;
  /// Time-indexed state values W_h(s) of the truncated problem, h = 0..H.
  Matrix stage_values(const Vector& theta) const;
  double optimal_return() const { return j_star_; }

 private:
  ChainMdp mdp_;
  double temperature_;
  double j_star_;
};

/// Trajectory-sampling oracle for the negated return. Gradient: mean over m
/// trajectories of sum_h Psi_h grad log pi(a_h|s_h), Psi_h the discounted
/// reward-to-go. Hessian: symmetrised mean of grad Phi grad log p(tau)' +
/// sum_h Psi_h hess log pi(a_h|s_h). Batch size counts trajectories.
class ChainMdpOracle : public StochasticOracle {
 public:
  ChainMdpOracle(std::shared_ptr<const ChainMdpObjective> objective, bool baseline,
                 std::uint64_t seed);

  Index dim() const override { return objective_->dim(); }
  Vector gradient_batch(const Vector& theta, std::uint64_t n, std::uint64_t seed) const override;
  LinearMap hessian_batch(const Vector& theta, std::uint64_t n,
                          std::uint64_t seed) const override;
  std::shared_ptr<const Problem> problem() const override { return objective_; }

  bool baseline() const { return baseline_; }
  /// State-action probes consumed per trajectory.
  int probes_per_sample() const { return objective_->mdp().horizon; }

 private:
  std::shared_ptr<const ChainMdpObjective> objective_;
  bool baseline_;
  std::uint64_t seed_;
};

struct ChainMdpPolicy {
  std::shared_ptr<ChainMdpObjective> objective;
  std::shared_ptr<ChainMdpOracle> oracle;
};

/// Validates the MDP, overrides its horizon and builds objective and oracle.
ChainMdpPolicy make_chain_mdp_policy(const ChainMdp& mdp, int horizon, double temperature,
                                     bool baseline = false, std::uint64_t seed = 0);

/// Sampled Hessian Lipschitz estimate: largest ||H(x) - H(y)||_2 / ||x - y||
/// over random nearby pairs in the ball of the given radius around `center`.
double estimate_lip_h(const Problem& problem, const Vector& center, double radius, int pairs,
                      std::uint64_t seed);

}  // namespace homodescent
