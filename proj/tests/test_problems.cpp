#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "homodescent/problems.hpp"
#include "support.hpp"

using namespace homodescent;

TEST(PlQuadratic, ScalarCase) {
  auto p = make_pl_quadratic(1, 1.0, 0);
  Vector x(1);
  x << 3.0;
  EXPECT_NEAR(p->value(x), 4.5, 1e-12);
  EXPECT_NEAR(p->c_gd(), 0.5, 1e-12);
  EXPECT_EQ(p->f_star(), 0.0);
  EXPECT_EQ(p->alpha(), 2.0);
  EXPECT_EQ(p->lip_h(), 0.0);
}

TEST(PlQuadratic, SpectrumAndSymmetry) {
  auto p = make_pl_quadratic(12, 100.0, 4);
  const auto e = hd_test::dense_eig(p->matrix());
  EXPECT_NEAR(e.values[0], 1.0, 1e-9);
  EXPECT_NEAR(e.values[11], 100.0, 1e-7);
  EXPECT_EQ(p->matrix(), p->matrix().transpose());
  EXPECT_NEAR(p->lip_g(), 100.0, 1e-7);
  EXPECT_THROW(make_pl_quadratic(3, 0.5, 1), ContractViolation);
}

TEST(PlQuadratic, GdEqualityAlongExtremeEigenvector) {
  auto p = make_pl_quadratic(8, 50.0, 2);
  const Vector u = 0.7 * p->eigenvectors().col(0);
  EXPECT_NEAR(gd_ratio(*p, u), p->c_gd(), 1e-10);
  const GdCheck c = verify_gd_constant(*p, 1000, 3);
  EXPECT_TRUE(c.holds);
  EXPECT_LE(c.worst_ratio, p->c_gd() * (1 + 1e-6));
}

TEST(PlQuadratic, FiniteDifferences) {
  auto p = make_pl_quadratic(10, 30.0, 6);
  const DerivativeCheck c = check_derivatives(*p, 100, 1);
  EXPECT_LE(c.gradient_error, 1e-5);
  EXPECT_LE(c.hessian_error, 1e-4);
}

TEST(PnormPower, AlphaAndConstants) {
  auto p2 = make_pnorm_power(3, 2.0);
  EXPECT_DOUBLE_EQ(p2->alpha(), 2.0);
  EXPECT_NEAR(p2->c_gd(), 0.25, 1e-15);
  EXPECT_EQ(p2->lip_h(), 0.0);
  auto p4 = make_pnorm_power(5, 4.0);
  EXPECT_NEAR(p4->alpha(), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(p4->c_gd(), std::pow(4.0, -4.0 / 3.0), 1e-15);
  EXPECT_NEAR(make_pnorm_power(2, 8.0)->alpha(), 8.0 / 7.0, 1e-15);
  EXPECT_NEAR(make_pnorm_power(2, 3.0)->alpha(), 1.5, 1e-15);
  EXPECT_THROW(make_pnorm_power(2, 1.5), ContractViolation);
}

TEST(PnormPower, UnitSphereEquality) {
  auto p = make_pnorm_power(5, 4.0);
  std::mt19937_64 rng(1);
  const Vector x = hd_test::random_vector(5, rng).normalized();
  EXPECT_NEAR(p->value(x), 1.0, 1e-14);
  EXPECT_NEAR(p->gradient(x).norm(), 4.0, 1e-13);
  EXPECT_NEAR(p->c_gd() * std::pow(4.0, 4.0 / 3.0), 1.0, 1e-13);
}

TEST(PnormPower, TightEverywhere) {
  for (double pw : {2.0, 3.0, 4.0, 8.0}) {
    auto p = make_pnorm_power(6, pw);
    const GdCheck c = verify_gd_constant(*p, 1000, 2);
    EXPECT_TRUE(c.holds) << pw;
    EXPECT_NEAR(c.worst_ratio, p->c_gd(), 1e-9 * p->c_gd()) << pw;
    EXPECT_FALSE(verify_gd_constant(*p, 100, 2, p->c_gd() / 2).holds);
  }
}

TEST(PnormPower, FiniteDifferences) {
  for (double pw : {2.0, 3.0, 4.0, 8.0}) {
    auto p = make_pnorm_power(7, pw, 2.0);
    const DerivativeCheck c = check_derivatives(*p, 100, 5, 2.0);
    EXPECT_LE(c.gradient_error, 1e-5) << pw;
    EXPECT_LE(c.hessian_error, 1e-4) << pw;
  }
}

TEST(PnormPower, LipschitzConstantsBoundSampledRatios) {
  std::mt19937_64 rng(8);
  for (double pw : {3.0, 4.0, 8.0}) {
    const double r = 1.5;
    auto p = make_pnorm_power(4, pw, r);
    double worst_g = 0.0;
    double worst_h = 0.0;
    for (int i = 0; i < 2000; ++i) {
      Vector x = hd_test::random_vector(4, rng);
      Vector y = hd_test::random_vector(4, rng);
      x *= r * std::pow(std::uniform_real_distribution<double>(0, 1)(rng), 0.25) / x.norm();
      y = x + 0.05 * y;
      if (y.norm() > r) continue;
      const double dx = (x - y).norm();
      worst_g = std::max(worst_g, (p->gradient(x) - p->gradient(y)).norm() / dx);
      const Matrix hx = dense_materialize(p->hessian_map(x));
      const Matrix hy = dense_materialize(p->hessian_map(y));
      worst_h = std::max(worst_h, hd_test::dense_eig(hx - hy).values.cwiseAbs().maxCoeff() / dx);
    }
    EXPECT_LE(worst_g, p->lip_g() * (1 + 1e-9)) << pw;
    EXPECT_LE(worst_h, p->lip_h() * (1 + 1e-9)) << pw;
  }
  EXPECT_TRUE(std::isinf(pnorm_lip_h(2.5, 1.0)));
  EXPECT_EQ(pnorm_lip_h(2.0, 3.0), 0.0);
}

TEST(PnormPower, LevelSet) {
  auto p = make_pnorm_power(3, 4.0, 2.0);
  EXPECT_TRUE(p->in_level_set(Vector::Constant(3, 1.0)));
  EXPECT_FALSE(p->in_level_set(Vector::Constant(3, 2.0)));
  EXPECT_NEAR(p->default_start(3).norm(), 2.0, 1e-12);
}

namespace {

class NoStar : public Problem {
 public:
  NoStar() : Problem(ProblemInfo{"nostar"}) {}
  Index dim() const override { return 1; }
  double value(const Vector& x) const override { return x.squaredNorm(); }
  Vector gradient(const Vector& x) const override { return 2 * x; }
  LinearMap hessian_map(const Vector&) const override {
    return LinearMap::diagonal(Vector::Constant(1, 2.0));
  }
};

}  // namespace

TEST(GdCheck, NeedsKnownMinimum) {
  NoStar p;
  EXPECT_FALSE(p.has_f_star());
  EXPECT_THROW(p.f_star(), Unsupported);
  EXPECT_THROW(verify_gd_constant(p, 10, 1), Unsupported);
}
