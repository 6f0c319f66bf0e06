#include "homodescent/oracle.hpp"

#include <cmath>
#include <string>

#include "homodescent/problems.hpp"
#include "homodescent/rng.hpp"

namespace homodescent {

double StochasticOracle::exact_value(const Vector& x) const {
  const auto p = problem();
  if (!p) throw Unsupported("oracle has no exact objective");
  return p->value(x);
}

Vector StochasticOracle::exact_gradient(const Vector& x) const {
  const auto p = problem();
  if (!p) throw Unsupported("oracle has no exact gradient");
  return p->gradient(x);
}

LinearMap StochasticOracle::exact_hessian(const Vector& x) const {
  const auto p = problem();
  if (!p) throw Unsupported("oracle has no exact Hessian");
  return p->hessian_map(x);
}

GradientEstimate batch_gradient(const StochasticOracle& oracle, const Vector& x,
                                std::uint64_t n, std::uint64_t seed, SampleCounter* counter) {
  if (n == 0) throw ContractViolation("batch_gradient: batch size must be >= 1");
  require(x.size() == oracle.dim(), "batch_gradient: length mismatch");
  GradientEstimate out{oracle.gradient_batch(x, n, seed), n};
  if (!out.g_hat.allFinite()) throw NumericError("batch_gradient: non-finite estimate");
  if (counter) counter->gradient += n;
  return out;
}

HessianEstimate batch_hessian_map(const StochasticOracle& oracle, const Vector& x,
                                  std::uint64_t n, std::uint64_t seed, SampleCounter* counter) {
  if (n == 0) throw ContractViolation("batch_hessian_map: batch size must be >= 1");
  require(x.size() == oracle.dim(), "batch_hessian_map: length mismatch");
  HessianEstimate out{oracle.hessian_batch(x, n, seed), n};
  if (counter) counter->hessian += n;
  return out;
}

namespace {

// sigma * S / ||S||_F with S = (Xi + Xi') / sqrt(2).
Matrix symmetric_noise(Index n, double sigma, Rng& rng) {
  Matrix xi(n, n);
  for (Index j = 0; j < n; ++j) xi.col(j) = standard_normal(n, rng);
  Matrix s = (xi + xi.transpose()) / std::sqrt(2.0);
  const double fro = s.norm();
  if (fro == 0.0) return Matrix::Zero(n, n);
  return (sigma / fro) * s;
}

void check_gradient(const Vector& g, const char* where) {
  if (!g.allFinite()) {
    throw NumericError(std::string(where) + ": non-finite gradient at sample 0");
  }
}

LinearMap plus_dense(const LinearMap& base, Matrix e) {
  return LinearMap(base.dim(), [base, e = std::move(e)](const Vector& v) -> Vector {
    return base.apply(v) + e * v;
  });
}

}  // namespace

AdditiveNoiseOracle::AdditiveNoiseOracle(std::shared_ptr<const Problem> problem, double sigma_g,
                                         double sigma_h, std::uint64_t seed)
    : problem_(std::move(problem)), sigma_g_(sigma_g), sigma_h_(sigma_h), seed_(seed) {
  require(problem_ != nullptr, "make_additive_noise_oracle: null problem");
  require(sigma_g >= 0.0 && sigma_h >= 0.0 && std::isfinite(sigma_g) && std::isfinite(sigma_h),
          "make_additive_noise_oracle: noise levels must be finite and >= 0");
}

Index AdditiveNoiseOracle::dim() const { return problem_->dim(); }

Vector AdditiveNoiseOracle::gradient_batch(const Vector& x, std::uint64_t n,
                                           std::uint64_t seed) const {
  Vector g = problem_->gradient(x);
  check_gradient(g, "AdditiveNoiseOracle");
  if (sigma_g_ > 0.0) {
    Rng rng(derive_seed(seed_, seed, StreamKind::kOracle, 1));
    g += (sigma_g_ / std::sqrt(static_cast<double>(n))) * standard_normal(g.size(), rng);
  }
  return g;
}

LinearMap AdditiveNoiseOracle::hessian_batch(const Vector& x, std::uint64_t n,
                                             std::uint64_t seed) const {
  LinearMap base = problem_->hessian_map(x);
  if (sigma_h_ == 0.0) return base;
  Rng rng(derive_seed(seed_, seed, StreamKind::kOracle, 2));
  const Index d = dim();
  Matrix e = Matrix::Zero(d, d);
  for (std::uint64_t i = 0; i < n; ++i) e += symmetric_noise(d, sigma_h_, rng);
  e /= static_cast<double>(n);
  return plus_dense(base, std::move(e));
}

std::shared_ptr<StochasticOracle> make_additive_noise_oracle(
    std::shared_ptr<const Problem> problem, double sigma_g, double sigma_h, std::uint64_t seed) {
  return std::make_shared<AdditiveNoiseOracle>(std::move(problem), sigma_g, sigma_h, seed);
}

std::shared_ptr<StochasticOracle> make_exact_oracle(std::shared_ptr<const Problem> problem) {
  return std::make_shared<AdditiveNoiseOracle>(std::move(problem), 0.0, 0.0, 0);
}

// ---------------------------------------------------------------------------

FiniteSumOracle::FiniteSumOracle(std::shared_ptr<const Problem> problem, std::size_t pool_size,
                                 double sigma_g, double sigma_h, std::uint64_t seed)
    : problem_(std::move(problem)) {
  require(problem_ != nullptr, "FiniteSumOracle: null problem");
  require(pool_size >= 2, "FiniteSumOracle: pool needs at least two elements");
  require(sigma_g >= 0.0 && sigma_h >= 0.0, "FiniteSumOracle: noise levels must be >= 0");
  const Index d = problem_->dim();
  Rng rng(derive_seed(seed, 0, StreamKind::kOracle, 3));
  Vector gmean = Vector::Zero(d);
  Matrix hmean = Matrix::Zero(d, d);
  grad_noise_.reserve(pool_size);
  hess_noise_.reserve(pool_size);
  for (std::size_t j = 0; j < pool_size; ++j) {
    grad_noise_.push_back(sigma_g * standard_normal(d, rng));
    hess_noise_.push_back(sigma_h > 0.0 ? symmetric_noise(d, sigma_h, rng) : Matrix::Zero(d, d));
    gmean += grad_noise_.back();
    hmean += hess_noise_.back();
  }
  gmean /= static_cast<double>(pool_size);
  hmean /= static_cast<double>(pool_size);
  for (std::size_t j = 0; j < pool_size; ++j) {
    grad_noise_[j] -= gmean;
    hess_noise_[j] -= hmean;
  }
}

Index FiniteSumOracle::dim() const { return problem_->dim(); }

std::vector<std::size_t> FiniteSumOracle::draw(std::uint64_t n, std::uint64_t seed) const {
  Rng rng(derive_seed(seed, 0, StreamKind::kOracle, 4));
  std::uniform_int_distribution<std::size_t> pick(0, grad_noise_.size() - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Vector FiniteSumOracle::gradient_batch(const Vector& x, std::uint64_t n,
                                       std::uint64_t seed) const {
  Vector g = problem_->gradient(x);
  check_gradient(g, "FiniteSumOracle");
  Vector noise = Vector::Zero(g.size());
  for (std::size_t i : draw(n, seed)) noise += grad_noise_[i];
  return g + noise / static_cast<double>(n);
}

LinearMap FiniteSumOracle::hessian_batch(const Vector& x, std::uint64_t n,
                                         std::uint64_t seed) const {
  const Index d = dim();
  Matrix e = Matrix::Zero(d, d);
  for (std::size_t i : draw(n, derive_seed(seed, 0x48))) e += hess_noise_[i];
  e /= static_cast<double>(n);
  return plus_dense(problem_->hessian_map(x), std::move(e));
}

// ---------------------------------------------------------------------------

std::pair<double, double> estimate_variance(const StochasticOracle& oracle, const Vector& x,
                                            int trials, std::uint64_t seed) {
  require(trials >= 2, "estimate_variance: trials must be >= 2");
  if (!oracle.has_exact()) throw Unsupported("estimate_variance: oracle has no exact gradient");
  const Vector g = oracle.exact_gradient(x);
  const Matrix h = dense_materialize(oracle.exact_hessian(x));
  double sg = 0.0;
  double sh = 0.0;
  for (int i = 0; i < trials; ++i) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
    sg += (oracle.gradient_batch(x, 1, s) - g).squaredNorm();
    sh += (dense_materialize(oracle.hessian_batch(x, 1, s)) - h).squaredNorm();
  }
  return {std::sqrt(sg / trials), std::sqrt(sh / trials)};
}

// ---------------------------------------------------------------------------

SpiderState spider_update(const SpiderState& state, const StochasticOracle& oracle,
                          const Vector& x_new, std::int64_t k, std::int64_t k_c,
                          const SpiderBatch& batch, std::uint64_t seed, SampleCounter* counter) {
  require(batch.n >= 1 && batch.n_h_checkpoint >= 1, "spider_update: batch sizes must be >= 1");
  require(k_c >= 1, "spider_update: K_C must be >= 1");
  require(k >= 0, "spider_update: k must be >= 0");
  require(x_new.size() == oracle.dim(), "spider_update: length mismatch");

  const bool checkpoint = batch.force_checkpoint || !state.initialized() || k % k_c == 0;
  const auto uk = static_cast<std::uint64_t>(k);

  SpiderState next;
  next.x_prev = x_new;
  next.k = k;
  if (checkpoint) {
    next.v = batch_gradient(oracle, x_new, batch.n, derive_seed(seed, uk, StreamKind::kGradient),
                            counter)
                 .g_hat;
    next.h_map = batch_hessian_map(oracle, x_new, batch.n_h_checkpoint,
                                   derive_seed(seed, uk, StreamKind::kHessian), counter)
                     .map;
    next.anchor_index = k;
    next.window_depth = 0;
    return next;
  }

  require(k > state.k, "spider_update: k must increase between updates");
  require(k >= state.anchor_index, "spider_update: k precedes the anchor");
  require(state.x_prev.size() == x_new.size(), "spider_update: state dimension mismatch");

  // One sample set S_k, evaluated at both points.
  const std::uint64_t gs = derive_seed(seed, uk, StreamKind::kSpider, 0);
  const std::uint64_t hs = derive_seed(seed, uk, StreamKind::kSpider, 1);
  const Vector g_new = oracle.gradient_batch(x_new, batch.n, gs);
  const Vector g_old = oracle.gradient_batch(state.x_prev, batch.n, gs);
  next.v = g_new + (state.v - g_old);
  if (!next.v.allFinite()) throw NumericError("spider_update: non-finite gradient estimate");

  const LinearMap h_new = oracle.hessian_batch(x_new, batch.n, hs);
  const LinearMap h_old = oracle.hessian_batch(state.x_prev, batch.n, hs);
  const LinearMap h_prev = state.h_map;
  next.h_map = LinearMap(x_new.size(), [h_new, h_old, h_prev](const Vector& u) -> Vector {
    return h_new.apply(u) + (h_prev.apply(u) - h_old.apply(u));
  });
  next.anchor_index = state.anchor_index;
  next.window_depth = state.window_depth + 1;
  if (counter) {
    counter->gradient += 2 * batch.n;
    counter->hessian += 2 * batch.n;
  }
  return next;
}

}  // namespace homodescent
