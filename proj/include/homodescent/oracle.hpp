#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "homodescent/linear_map.hpp"

namespace homodescent {

class Problem;

/// Per-run sample accounting. Every estimator call adds the number of
/// per-sample evaluations it performed.
struct SampleCounter {
  std::uint64_t gradient = 0;
  std::uint64_t hessian = 0;
  std::uint64_t total() const { return gradient + hessian; }
};

/// Unbiased stochastic first- and second-order access to F(x) = E f(x, xi).
///
/// Implementations are immutable after construction. A batch call with the
/// same (x, n, seed) returns identical results, and two calls sharing a seed
/// use the same sample set at both points.
class StochasticOracle {
 public:
  virtual ~StochasticOracle() = default;

  virtual Index dim() const = 0;

  /// Mean of n per-sample gradients.
  virtual Vector gradient_batch(const Vector& x, std::uint64_t n, std::uint64_t seed) const = 0;
  /// Mean of n per-sample symmetric Hessian maps.
  virtual LinearMap hessian_batch(const Vector& x, std::uint64_t n, std::uint64_t seed) const = 0;

  /// The objective behind the oracle, for diagnostics. May be null.
  virtual std::shared_ptr<const Problem> problem() const { return nullptr; }

  bool has_exact() const { return problem() != nullptr; }
  double exact_value(const Vector& x) const;
  Vector exact_gradient(const Vector& x) const;
  LinearMap exact_hessian(const Vector& x) const;
};

struct GradientEstimate {
  Vector g_hat;
  std::uint64_t samples = 0;
};

struct HessianEstimate {
  LinearMap map;
  std::uint64_t samples = 0;
};

/// n >= 1 required. Adds n to counter->gradient when a counter is given.
GradientEstimate batch_gradient(const StochasticOracle& oracle, const Vector& x,
                                std::uint64_t n, std::uint64_t seed,
                                SampleCounter* counter = nullptr);

HessianEstimate batch_hessian_map(const StochasticOracle& oracle, const Vector& x,
                                  std::uint64_t n, std::uint64_t seed,
                                  SampleCounter* counter = nullptr);

/// Gradient plus sigma_g * zeta with zeta ~ N(0, I) per sample; Hessian plus
/// sigma_h * S / ||S||_F with S = (Xi + Xi^T) / sqrt(2), Xi Gaussian.
///
/// The mean of n Gaussian gradient perturbations is drawn directly from
/// N(0, sigma_g^2 / n I), which has the same law as averaging n draws. With
/// zero noise the exact quantities are returned bit for bit.
class AdditiveNoiseOracle : public StochasticOracle {
 public:
  AdditiveNoiseOracle(std::shared_ptr<const Problem> problem, double sigma_g, double sigma_h,
                      std::uint64_t seed);

  Index dim() const override;
  Vector gradient_batch(const Vector& x, std::uint64_t n, std::uint64_t seed) const override;
  LinearMap hessian_batch(const Vector& x, std::uint64_t n, std::uint64_t seed) const override;
  std::shared_ptr<const Problem> problem() const override { return problem_; }

  double sigma_g() const { return sigma_g_; }
  double sigma_h() const { return sigma_h_; }

 private:
  std::shared_ptr<const Problem> problem_;
  double sigma_g_;
  double sigma_h_;
  std::uint64_t seed_;
};

std::shared_ptr<StochasticOracle> make_additive_noise_oracle(
    std::shared_ptr<const Problem> problem, double sigma_g, double sigma_h, std::uint64_t seed);

/// Noise-free oracle: every batch returns the exact gradient / Hessian.
std::shared_ptr<StochasticOracle> make_exact_oracle(std::shared_ptr<const Problem> problem);

/// Finite pool of centred noise terms sampled with replacement. The per-sample
/// gradient difference between two points equals the exact difference, so the
/// average-Lipschitz condition holds with L'_1 = L_g^2.
class FiniteSumOracle : public StochasticOracle {
 public:
  FiniteSumOracle(std::shared_ptr<const Problem> problem, std::size_t pool_size,
                  double sigma_g, double sigma_h, std::uint64_t seed);

  Index dim() const override;
  Vector gradient_batch(const Vector& x, std::uint64_t n, std::uint64_t seed) const override;
  LinearMap hessian_batch(const Vector& x, std::uint64_t n, std::uint64_t seed) const override;
  std::shared_ptr<const Problem> problem() const override { return problem_; }

  std::size_t pool_size() const { return grad_noise_.size(); }

 private:
  std::vector<std::size_t> draw(std::uint64_t n, std::uint64_t seed) const;

  std::shared_ptr<const Problem> problem_;
  std::vector<Vector> grad_noise_;
  std::vector<Matrix> hess_noise_;
};

/// Empirical noise levels from `trials` single-sample estimates:
/// sigma_g_hat = sqrt(mean ||g_1 - grad F||^2), sigma_h_hat = sqrt(mean ||H_1 - hess F||_F^2).
/// Requires exact access; throws Unsupported otherwise.
std::pair<double, double> estimate_variance(const StochasticOracle& oracle, const Vector& x,
                                            int trials, std::uint64_t seed);

/// Recursive (SPIDER) gradient and Hessian estimates.
struct SpiderState {
  Vector v;           // running gradient estimate at x_prev
  LinearMap h_map;    // running Hessian estimate at x_prev
  std::int64_t anchor_index = -1;
  Vector x_prev;
  std::int64_t k = -1;
  int window_depth = 0;  // Hessian difference terms since the anchor

  bool initialized() const { return anchor_index >= 0; }
};

struct SpiderBatch {
  std::uint64_t n = 1;             // |S_k|, shared by gradient and Hessian differences
  std::uint64_t n_h_checkpoint = 1;  // fresh Hessian batch at checkpoints
  bool force_checkpoint = false;
};

/// Checkpoint when k mod k_c == 0 (or forced, or the state is empty): fresh
/// batch estimates at x_new. Otherwise
///   v_k = g_S(x_k) + (v_{k-1} - g_S(x_{k-1})),
///   H_k = H_S(x_k) + (H_{k-1} - H_S(x_{k-1})),
/// with one sample set S for both points. Grouped this way the recursion is
/// exact in floating point when the oracle is noise-free.
SpiderState spider_update(const SpiderState& state, const StochasticOracle& oracle,
                          const Vector& x_new, std::int64_t k, std::int64_t k_c,
                          const SpiderBatch& batch, std::uint64_t seed,
                          SampleCounter* counter = nullptr);

}  // namespace homodescent
