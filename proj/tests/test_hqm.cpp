#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "homodescent/hqm.hpp"
#include "support.hpp"

using namespace homodescent;
using hd_test::random_symmetric;
using hd_test::random_vector;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST(SolveHqm, BlockDiagonalIdentity) {
  const HqmSolution s = solve_hqm(LinearMap::identity(2), Vector::Zero(2), 0.0, 1e-10, 1);
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(s.lambda, 0.0, 1e-12);
  EXPECT_NEAR(s.t, 1.0, 1e-10);
  EXPECT_NEAR(s.v.norm(), 0.0, 1e-10);
  ASSERT_FALSE(s.t_is_degenerate);
  EXPECT_NEAR(s.d.norm(), 0.0, 1e-10);
}

TEST(SolveHqm, ScalarZeroHessian) {
  const HqmSolution s = solve_hqm(LinearMap::zero(1), vec({1.0}), 0.0, 1e-10, 1);
  EXPECT_NEAR(s.lambda, -1.0, 1e-12);
  EXPECT_NEAR(s.theta, 1.0, 1e-12);
  EXPECT_NEAR(s.v[0], -1.0 / std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(s.t, 1.0 / std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(s.d[0], -1.0, 1e-10);
  const KktResiduals r = kkt_residuals(s, LinearMap::zero(1), vec({1.0}), 0.0);
  EXPECT_NEAR(*r.stationarity, 0.0, 1e-10);
  EXPECT_NEAR(*r.curve, 0.0, 1e-10);
  EXPECT_NEAR(vec({1.0}).dot(s.d), -1.0, 1e-10);
}

TEST(SolveHqm, RandomInstancesSatisfyOptimality) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ud(-5.0, 5.0);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 1 + rep % 30;
    const Matrix h = random_symmetric(n, rng);
    const Vector g = random_vector(n, rng);
    const double delta = ud(rng);
    const LinearMap hm = LinearMap::from_dense(h);
    const HqmSolution s = solve_hqm(hm, g, delta, 1e-12, rep);
    EXPECT_NEAR(s.lambda, hd_test::dense_lambda_min(hd_test::augmented_dense(h, g, delta)), 1e-8);
    ASSERT_FALSE(s.t_is_degenerate);
    const KktResiduals r = kkt_residuals(s, hm, g, delta);
    EXPECT_LE(*r.stationarity, 1e-8 * (1.0 + g.norm())) << "rep " << rep;
    EXPECT_LE(*r.curve, 1e-8 * (1.0 + g.norm() * s.d.norm())) << "rep " << rep;
    EXPECT_LE(r.norm_dev, 1e-10);
    EXPECT_GE(s.t, 0.0);
    if (delta >= 0.0) EXPECT_GE(s.theta, delta - 1e-10);
  }
}

TEST(SolveHqm, DirectionIndependentOfEigenvectorSign) {
  std::mt19937_64 rng(5);
  const Matrix h = random_symmetric(6, rng);
  const Vector g = random_vector(6, rng);
  const HqmSolution a = solve_hqm(LinearMap::from_dense(h), g, 0.4, 1e-12, 1);
  const HqmSolution b = solve_hqm(LinearMap::from_dense(h), g, 0.4, 1e-12, 2);
  EXPECT_LE((a.d - b.d).norm(), 1e-8);
  const Vector want = hd_test::dense_direction(h, g, 0.4);
  EXPECT_LE((a.d - want).norm(), 1e-8);
}

TEST(SolveHqm, HardCaseIsFlaggedDegenerate) {
  // g orthogonal to the bottom eigenvector of H and delta large: the leftmost
  // eigenvector of A is (e1, 0).
  const HqmSolution s =
      solve_hqm(LinearMap::diagonal(vec({-1.0, 1.0})), vec({0.0, 1.0}), -5.0, 1e-12, 3);
  EXPECT_TRUE(s.t_is_degenerate);
  EXPECT_EQ(s.d.size(), 0);
  const KktResiduals r =
      kkt_residuals(s, LinearMap::diagonal(vec({-1.0, 1.0})), vec({0.0, 1.0}), -5.0);
  EXPECT_FALSE(r.stationarity.has_value());
  EXPECT_FALSE(r.curve.has_value());
}

TEST(Kkt, ExactSolutionAndPerturbedDirection) {
  std::mt19937_64 rng(9);
  const Matrix h = random_symmetric(7, rng);
  const Vector g = random_vector(7, rng);
  const LinearMap hm = LinearMap::from_dense(h);
  HqmSolution s = solve_hqm(hm, g, 0.1, 1e-13, 1);
  KktResiduals r = kkt_residuals(s, hm, g, 0.1);
  EXPECT_LE(*r.stationarity, 1e-10);
  EXPECT_LE(*r.curve, 1e-10);
  EXPECT_LE(r.norm_dev, 1e-10);

  const Vector u = random_vector(7, rng).normalized();
  s.d += 1e-3 * u;
  r = kkt_residuals(s, hm, g, 0.1);
  const Matrix shifted = h + s.theta * Matrix::Identity(7, 7);
  const double expected = 1e-3 * (shifted * u).norm();
  EXPECT_NEAR(*r.stationarity, expected, 1e-9);
  EXPECT_LE(*r.stationarity, 1e-3 * hd_test::dense_eig(shifted).values.cwiseAbs().maxCoeff() + 1e-9);
}

TEST(Kkt, ZeroGradientIdentity) {
  const HqmSolution s = solve_hqm(LinearMap::identity(3), Vector::Zero(3), 0.0, 1e-10, 1);
  const KktResiduals r = kkt_residuals(s, LinearMap::identity(3), Vector::Zero(3), 0.0);
  EXPECT_NEAR(*r.curve, 0.0, 1e-12);
}

TEST(Perturb, LargeProjectionLeavesGradient) {
  const Perturbation p =
      perturb_gradient(LinearMap::diagonal(vec({-1.0, 1.0})), vec({3.0, 0.0}), 0.1, 1);
  EXPECT_FALSE(p.perturbed);
  EXPECT_EQ(p.g_prime, vec({3.0, 0.0}));
  EXPECT_NEAR(p.projection_norm, 3.0, 1e-10);
}

TEST(Perturb, ZeroProjectionUsesSeededDirection) {
  const Perturbation p =
      perturb_gradient(LinearMap::diagonal(vec({-1.0, 1.0})), vec({0.0, 1.0}), 0.1, 1);
  EXPECT_TRUE(p.perturbed);
  EXPECT_NEAR(std::abs(p.g_prime[0]), 0.1, 1e-7);
  EXPECT_NEAR(p.g_prime[1], 1.0, 1e-12);
  const Perturbation q =
      perturb_gradient(LinearMap::diagonal(vec({-1.0, 1.0})), vec({0.0, 1.0}), 0.1, 1);
  EXPECT_EQ(p.g_prime, q.g_prime);
}

TEST(Perturb, SmallProjectionIsPushedOut) {
  const Perturbation p =
      perturb_gradient(LinearMap::diagonal(vec({-1.0, 1.0})), vec({0.05, 1.0}), 0.1, 1);
  EXPECT_TRUE(p.perturbed);
  EXPECT_NEAR(p.g_prime[0], 0.15, 1e-7);
  EXPECT_NEAR(p.g_prime[1], 1.0, 1e-12);
}

TEST(Perturb, PostConditionAndIdempotence) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    Vector spec = Vector::LinSpaced(8, -1.0, 3.0);
    if (rep % 2) spec[1] = spec[0];
    Matrix q;
    const Matrix h = hd_test::with_spectrum(spec, rng, &q);
    const int mult = rep % 2 ? 2 : 1;
    // Gradient almost orthogonal to the bottom eigenspace.
    Vector g = q.rightCols(8 - mult) * random_vector(8 - mult, rng);
    g += 1e-3 * q.col(0);
    const LinearMap hm = LinearMap::from_dense(h);
    const double eps = 0.05;
    const Perturbation p = perturb_gradient(hm, g, eps, rep, 1e-12);
    EXPECT_TRUE(p.perturbed);
    const Matrix b = q.leftCols(mult);
    EXPECT_GE((b * (b.transpose() * p.g_prime)).norm(), eps);
    EXPECT_LE((p.g_prime - g).norm(), eps + 1e-6);
    const Perturbation again = perturb_gradient(hm, p.g_prime, eps, rep + 100, 1e-12);
    EXPECT_FALSE(again.perturbed);
    EXPECT_EQ(again.g_prime, p.g_prime);
  }
}

TEST(DefaultBracket, Examples) {
  auto [lo, hi] = default_bracket(1.0, 1.0, 5.0 / 3.0, 0.01);
  EXPECT_NEAR(lo, -111.0, 1e-12);
  EXPECT_NEAR(hi, 11.0 / 3.0, 1e-12);
  std::tie(lo, hi) = default_bracket(0.0, 2.0, 1.5, 0.1);
  EXPECT_DOUBLE_EQ(lo, -2.0);
  EXPECT_DOUBLE_EQ(hi, 3.0);
  EXPECT_THROW(default_bracket(1.0, 1.0, 1.0, 0.0), ContractViolation);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(1e-3, 10.0);
  for (int i = 0; i < 100; ++i) {
    std::tie(lo, hi) = default_bracket(u(rng), u(rng), u(rng), u(rng));
    EXPECT_LT(lo, 0.0);
    EXPECT_GT(hi, 0.0);
  }
}

TEST(BisectionBudget, WidthHundred) {
  EXPECT_EQ(bisection_budget(100.0, 1e-4) + 1, 21);
  EXPECT_EQ(bisection_budget(1.0, 2.0), 0);
}

TEST(Linesearch, IdentityHessianScalarRoot) {
  LinesearchConfig cfg;
  cfg.c_e = 1.0;
  cfg.eps_ls = 1e-6;
  cfg.eps_eig = 1e-3;
  std::tie(cfg.delta_lo, cfg.delta_hi) = default_bracket(1.0 + 1e-3, 1.0, 1.0, 1e-3);
  const LinesearchResult r =
      adaptive_delta_search(LinearMap::identity(3), vec({1.0, 0.0, 0.0}), cfg, 1);
  const double theta_star = (std::sqrt(5.0) - 1.0) / 2.0;
  EXPECT_FALSE(r.perturbed);
  EXPECT_NEAR(r.solution.theta, theta_star, 1e-6);
  EXPECT_LE(std::abs(r.h_value), cfg.eps_ls);
  EXPECT_LE(r.bisections, bisection_budget(cfg.delta_hi - cfg.delta_lo, cfg.eps_ls) + 1);
}

TEST(Linesearch, HardCaseIsPerturbedThenSolved) {
  LinesearchConfig cfg;
  cfg.c_e = 4.0 / 3.0;
  cfg.eps_ls = 1e-6;
  cfg.eps_eig = 0.1;
  std::tie(cfg.delta_lo, cfg.delta_hi) = default_bracket(1.1, 1.0, cfg.c_e, cfg.eps_eig);
  const Vector g = vec({0.0, 1.0});
  const LinesearchResult r =
      adaptive_delta_search(LinearMap::diagonal(vec({-1.0, 1.0})), g, cfg, 2);
  EXPECT_TRUE(r.perturbed);
  EXPECT_FALSE(r.solution.t_is_degenerate);
  EXPECT_LE(std::abs(r.h_value), cfg.eps_ls);
  // Dense check on the perturbed instance.
  const Matrix h = Vector(vec({-1.0, 1.0})).asDiagonal();
  const Vector d = hd_test::dense_direction(h, r.g_prime, r.delta);
  ASSERT_GT(d.size(), 0);
  EXPECT_LE((d - r.solution.d).norm(), 1e-6);
  EXPECT_NEAR(hd_test::dense_theta(h, r.g_prime, r.delta) - cfg.c_e * d.norm(), r.h_value, 1e-6);
}

TEST(Linesearch, ResultInsideBracketAndWithinBudget) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 2 + rep % 12;
    const Matrix h = random_symmetric(n, rng);
    const Vector g = random_vector(n, rng);
    LinesearchConfig cfg;
    cfg.c_e = 1.0 + rep % 3;
    cfg.eps_ls = 1e-5;
    cfg.eps_eig = 1e-3;
    const double c_h = hd_test::dense_eig(h).values.cwiseAbs().maxCoeff();
    std::tie(cfg.delta_lo, cfg.delta_hi) =
        default_bracket(g.norm() + cfg.eps_eig, c_h, cfg.c_e, cfg.eps_eig);
    const LinesearchResult r = adaptive_delta_search(LinearMap::from_dense(h), g, cfg, rep);
    EXPECT_EQ(r.expansions, 0);
    EXPECT_GE(r.delta, cfg.delta_lo);
    EXPECT_LE(r.delta, cfg.delta_hi);
    EXPECT_LE(std::abs(r.h_value), cfg.eps_ls + 1e-8);
    EXPECT_LE(r.bisections, bisection_budget(cfg.delta_hi - cfg.delta_lo, cfg.eps_ls) + 1);
  }
}

TEST(Linesearch, PrintedBranchLosesTheRoot) {
  std::mt19937_64 rng(13);
  int failures = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix h = random_symmetric(6, rng);
    const Vector g = random_vector(6, rng);
    LinesearchConfig cfg;
    cfg.eps_ls = 1e-6;
    cfg.eps_eig = 1e-3;
    std::tie(cfg.delta_lo, cfg.delta_hi) = default_bracket(g.norm() + 1e-3, 5.0, cfg.c_e, 1e-3);
    cfg.branch = BranchRule::kAsPrinted;
    try {
      const LinesearchResult r = adaptive_delta_search(LinearMap::from_dense(h), g, cfg, rep);
      if (std::abs(r.h_value) > cfg.eps_ls) ++failures;
    } catch (const LinesearchError&) {
      ++failures;
    }
  }
  EXPECT_GE(failures, 8);
}

TEST(Linesearch, InvalidConfigIsRefused) {
  LinesearchConfig cfg;
  cfg.delta_lo = 1.0;
  cfg.delta_hi = -1.0;
  EXPECT_THROW(adaptive_delta_search(LinearMap::identity(2), Vector::Ones(2), cfg, 1),
               ContractViolation);
  cfg = LinesearchConfig{};
  cfg.eps_ls = 0.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
}

TEST(DeltaCurve, ThetaMonotoneAndLipschitz) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 2 + rep % 10;
    const Matrix h = random_symmetric(n, rng);
    const Vector g = random_vector(n, rng);
    const LinearMap hm = LinearMap::from_dense(h);
    double prev_theta = -1e300;
    double prev_delta = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double delta = -5.0 + 10.0 * i / 49.0;
      const HqmSolution s = solve_hqm(hm, g, delta, 1e-12, i);
      EXPECT_NEAR(s.theta, hd_test::dense_theta(h, g, delta), 1e-8);
      if (i > 0) {
        EXPECT_GE(s.theta, prev_theta - 1e-8);
        EXPECT_LE(std::abs(s.theta - prev_theta), std::abs(delta - prev_delta) + 1e-8);
      }
      prev_theta = s.theta;
      prev_delta = delta;
    }
  }
}

TEST(DeltaCurve, HIsNonDecreasingWhenTStaysAwayFromZero) {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 3 + rep % 6;
    const Matrix h = random_symmetric(n, rng);
    const Vector g = random_vector(n, rng, 2.0);
    double prev = -1e300;
    for (int i = 0; i < 60; ++i) {
      const double delta = -20.0 + 30.0 * i / 59.0;
      const Vector d = hd_test::dense_direction(h, g, delta);
      if (d.size() == 0) continue;
      const double hv = hd_test::dense_theta(h, g, delta) - 1.5 * d.norm();
      EXPECT_GE(hv, prev - 1e-8);
      prev = hv;
    }
  }
}

TEST(DeltaCurve, ThetaApproachesMinusLambdaMinFromAbove) {
  std::mt19937_64 rng(23);
  const Matrix h = random_symmetric(5, rng);
  const Vector g = random_vector(5, rng);
  const double lh = hd_test::dense_lambda_min(h);
  const double far = hd_test::dense_theta(h, g, -1e6);
  EXPECT_GE(far, -lh - 1e-9);
  EXPECT_LE(far, -lh + 1e-3);
}
