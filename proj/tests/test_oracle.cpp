#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "homodescent/oracle.hpp"
#include "homodescent/problems.hpp"
#include "homodescent/rng.hpp"
#include "support.hpp"

using namespace homodescent;

namespace {

std::shared_ptr<PlQuadratic> quad(Index n = 6) { return make_pl_quadratic(n, 10.0, 3); }

Matrix materialize(const LinearMap& m) { return dense_materialize(m); }

}  // namespace

TEST(BatchGradient, ZeroNoiseIsExact) {
  auto p = quad();
  auto o = make_additive_noise_oracle(p, 0.0, 0.0, 1);
  const Vector x = Vector::LinSpaced(6, -1.0, 1.0);
  for (std::uint64_t n : {1u, 7u, 1000u}) {
    EXPECT_EQ(batch_gradient(*o, x, n, n).g_hat, p->gradient(x));
    EXPECT_EQ(materialize(batch_hessian_map(*o, x, n, n).map), p->matrix());
  }
}

TEST(BatchGradient, CountsSamplesAndRefusesZero) {
  auto o = make_additive_noise_oracle(quad(), 1.0, 1.0, 1);
  SampleCounter c;
  const Vector x = Vector::Ones(6);
  EXPECT_EQ(batch_gradient(*o, x, 5, 1, &c).samples, 5u);
  EXPECT_EQ(batch_hessian_map(*o, x, 3, 1, &c).samples, 3u);
  EXPECT_EQ(c.gradient, 5u);
  EXPECT_EQ(c.hessian, 3u);
  EXPECT_EQ(c.total(), 8u);
  EXPECT_THROW(batch_gradient(*o, x, 0, 1), ContractViolation);
  EXPECT_THROW(batch_hessian_map(*o, x, 0, 1), ContractViolation);
}

TEST(BatchGradient, SameSeedSameOutput) {
  auto o = make_additive_noise_oracle(quad(), 1.0, 0.5, 9);
  const Vector x = Vector::Ones(6);
  EXPECT_EQ(batch_gradient(*o, x, 1, 4).g_hat, batch_gradient(*o, x, 1, 4).g_hat);
  EXPECT_NE(batch_gradient(*o, x, 1, 4).g_hat, batch_gradient(*o, x, 1, 5).g_hat);
  EXPECT_EQ(materialize(batch_hessian_map(*o, x, 2, 4).map),
            materialize(batch_hessian_map(*o, x, 2, 4).map));
}

TEST(BatchGradient, MeanShrinksLikeOneOverRootN) {
  auto p = make_pl_quadratic(10, 5.0, 1);
  auto o = make_additive_noise_oracle(p, 1.0, 0.0, 2);
  const Vector x = Vector::Zero(10);
  // E||g_hat||^2 = dim / n at the minimizer.
  for (std::uint64_t n : {1u, 100u, 10000u}) {
    double acc = 0.0;
    const int trials = 400;
    for (int s = 0; s < trials; ++s) acc += batch_gradient(*o, x, n, 1000 + s).g_hat.squaredNorm();
    const double want = 10.0 / static_cast<double>(n);
    EXPECT_NEAR(acc / trials, want, 0.2 * want) << "n=" << n;
  }
}

TEST(BatchGradient, UnbiasedComponentwise) {
  auto p = quad();
  auto o = make_additive_noise_oracle(p, 1.0, 0.0, 7);
  const Vector x = Vector::LinSpaced(6, 0.5, 2.0);
  Vector mean = Vector::Zero(6);
  const int trials = 10000;
  for (int s = 0; s < trials; ++s) mean += batch_gradient(*o, x, 1, s).g_hat;
  mean /= trials;
  EXPECT_LE((mean - p->gradient(x)).cwiseAbs().maxCoeff(), 4.0 / 100.0);
}

TEST(BatchHessian, NoiseIsSymmetricAndDecaysLikeOneOverN) {
  auto p = quad(5);
  auto o = make_additive_noise_oracle(p, 0.0, 1.0, 3);
  const Vector x = Vector::Zero(5);
  std::vector<double> means;
  for (std::uint64_t n : {1u, 4u, 16u}) {
    double acc = 0.0;
    const int trials = 2000;
    for (int s = 0; s < trials; ++s) {
      const Matrix h = materialize(batch_hessian_map(*o, x, n, s).map);
      EXPECT_EQ(h, h.transpose());
      acc += (h - p->matrix()).squaredNorm();
    }
    means.push_back(acc / trials);
  }
  // Single sample has Frobenius norm exactly sigma_h.
  EXPECT_NEAR(means[0], 1.0, 1e-9);
  EXPECT_NEAR(means[1], 0.25, 0.03);
  EXPECT_NEAR(means[2], 1.0 / 16.0, 0.008);
}

TEST(AdditiveNoise, ChiSquareMeanAtHundredSamples) {
  auto p = make_pl_quadratic(8, 3.0, 4);
  auto o = make_additive_noise_oracle(p, 1.0, 0.0, 11);
  double acc = 0.0;
  for (int s = 0; s < 200; ++s) acc += batch_gradient(*o, Vector::Zero(8), 100, s).g_hat.squaredNorm();
  EXPECT_NEAR(acc / 200.0, 8.0 / 100.0, 0.02);
}

TEST(AdditiveNoise, RejectsNegativeSigma) {
  EXPECT_THROW(make_additive_noise_oracle(quad(), -1.0, 0.0, 1), ContractViolation);
  EXPECT_THROW(make_additive_noise_oracle(quad(), 0.0, -1.0, 1), ContractViolation);
}

TEST(EstimateVariance, ZeroNoiseAndScaling) {
  auto p = make_pl_quadratic(4, 2.0, 5);
  const Vector x = Vector::Ones(4);
  auto [sg0, sh0] = estimate_variance(*make_exact_oracle(p), x, 10, 1);
  EXPECT_NEAR(sg0, 0.0, 1e-12);
  EXPECT_NEAR(sh0, 0.0, 1e-12);

  auto [sg1, sh1] = estimate_variance(*make_additive_noise_oracle(p, 1.0, 0.5, 2), x, 10000, 3);
  EXPECT_NEAR(sg1, 2.0, 0.05 * 2.0);  // sqrt(dim) * sigma_g
  EXPECT_NEAR(sh1, 0.5, 1e-9);
  auto [sg2, sh2] = estimate_variance(*make_additive_noise_oracle(p, 2.0, 0.5, 2), x, 10000, 3);
  EXPECT_NEAR(sg2 / sg1, 2.0, 0.1);
  (void)sh2;
}

namespace {

class Opaque : public StochasticOracle {
 public:
  Index dim() const override { return 2; }
  Vector gradient_batch(const Vector& x, std::uint64_t, std::uint64_t) const override { return x; }
  LinearMap hessian_batch(const Vector&, std::uint64_t, std::uint64_t) const override {
    return LinearMap::identity(2);
  }
};

}  // namespace

TEST(EstimateVariance, NeedsExactAccess) {
  Opaque o;
  EXPECT_FALSE(o.has_exact());
  EXPECT_THROW(estimate_variance(o, Vector::Zero(2), 10, 1), Unsupported);
}

TEST(FiniteSum, PoolIsCentredAndDifferencesExact) {
  auto p = quad(4);
  FiniteSumOracle o(p, 32, 1.0, 0.5, 8);
  const Vector x = Vector::Ones(4);
  const Vector y = Vector::LinSpaced(4, -1.0, 2.0);
  const Vector dg = batch_gradient(o, x, 5, 3).g_hat - batch_gradient(o, y, 5, 3).g_hat;
  EXPECT_LE((dg - (p->gradient(x) - p->gradient(y))).norm(), 1e-12);
  Vector mean = Vector::Zero(4);
  const int trials = 20000;
  for (int s = 0; s < trials; ++s) mean += batch_gradient(o, x, 1, s).g_hat;
  mean /= trials;
  EXPECT_LE((mean - p->gradient(x)).norm(), 0.05);
  EXPECT_EQ(o.pool_size(), 32u);
}

TEST(Spider, CheckpointEqualsFreshBatch) {
  auto o = make_additive_noise_oracle(quad(), 1.0, 0.5, 5);
  const Vector x = Vector::Ones(6);
  SpiderBatch b;
  b.n = 10;
  b.n_h_checkpoint = 3;
  SampleCounter c;
  const SpiderState s = spider_update(SpiderState{}, *o, x, 4, 4, b, 77, &c);
  EXPECT_EQ(s.anchor_index, 4);
  EXPECT_EQ(s.window_depth, 0);
  EXPECT_EQ(s.v, batch_gradient(*o, x, 10, derive_seed(77, 4, StreamKind::kGradient)).g_hat);
  EXPECT_EQ(c.gradient, 10u);
  EXPECT_EQ(c.hessian, 3u);
}

TEST(Spider, ZeroStepLeavesEstimateUnchanged) {
  auto o = make_additive_noise_oracle(quad(), 1.0, 0.5, 5);
  const Vector x = Vector::Ones(6);
  SpiderBatch b;
  b.n = 10;
  SpiderState s = spider_update(SpiderState{}, *o, x, 0, 4, b, 1);
  const Vector v0 = s.v;
  const Matrix h0 = dense_materialize(s.h_map);
  SampleCounter c;
  s = spider_update(s, *o, x, 1, 4, b, 2, &c);
  EXPECT_EQ(s.v, v0);
  EXPECT_LE((dense_materialize(s.h_map) - h0).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(s.window_depth, 1);
  EXPECT_EQ(c.gradient, 20u);
  EXPECT_EQ(c.hessian, 20u);
}

TEST(Spider, DeterministicOracleTracksExactGradient) {
  auto p = quad();
  auto o = make_exact_oracle(p);
  std::mt19937_64 rng(3);
  Vector x = hd_test::random_vector(6, rng);
  for (std::int64_t kc : {1, 3, 100}) {
    SpiderState s;
    for (std::int64_t k = 0; k < 10; ++k) {
      x += 0.1 * hd_test::random_vector(6, rng);
      SpiderBatch b;
      b.n = 4;
      s = spider_update(s, *o, x, k, kc, b, static_cast<std::uint64_t>(k));
      EXPECT_EQ(s.v, p->gradient(x)) << "k=" << k << " kc=" << kc;
      EXPECT_EQ(dense_materialize(s.h_map), p->matrix());
    }
  }
}

TEST(Spider, ForcedCheckpointAndWindowDepth) {
  auto o = make_additive_noise_oracle(quad(), 1.0, 0.5, 5);
  SpiderBatch b;
  b.n = 2;
  SpiderState s = spider_update(SpiderState{}, *o, Vector::Ones(6), 1, 4, b, 1);
  EXPECT_EQ(s.anchor_index, 1);  // empty state forces a checkpoint
  s = spider_update(s, *o, Vector::Zero(6), 2, 4, b, 2);
  s = spider_update(s, *o, Vector::Ones(6), 3, 4, b, 3);
  EXPECT_EQ(s.window_depth, 2);
  b.force_checkpoint = true;
  s = spider_update(s, *o, Vector::Ones(6), 5, 4, b, 4);
  EXPECT_EQ(s.anchor_index, 5);
  EXPECT_EQ(s.window_depth, 0);
}
