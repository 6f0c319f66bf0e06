#include <cmath>

#include <gtest/gtest.h>

#include "homodescent/planner.hpp"
#include "homodescent/types.hpp"

using namespace homodescent;

TEST(PlanSampleSizes, Examples) {
  SamplePlan p = plan_sample_sizes(1e-2, 1.0);
  EXPECT_EQ(p.n_g, 10000u);
  EXPECT_EQ(p.n_h, 100u);
  EXPECT_NEAR(p.eps_eig, 0.01, 1e-15);
  EXPECT_NEAR(p.eps_ls, 0.01, 1e-15);

  p = plan_sample_sizes(1e-2, 2.0);
  EXPECT_EQ(p.n_g, 100u);
  EXPECT_EQ(p.n_h, 10u);
  EXPECT_NEAR(p.eps_eig, 0.1, 1e-15);
  EXPECT_NEAR(p.eps_ls, 0.1, 1e-15);

  for (double a : {1.0, 1.3, 2.0}) {
    p = plan_sample_sizes(1.0, a);
    EXPECT_EQ(p.n_g, 1u);
    EXPECT_EQ(p.n_h, 1u);
    EXPECT_EQ(p.eps_eig, 1.0);
    EXPECT_EQ(p.eps_ls, 1.0);
  }
}

TEST(PlanSampleSizes, ConstantsScale) {
  PlannerConstants c;
  c.c_g = 2.5;
  c.c_h = 3.0;
  c.c_eig = 0.5;
  c.c_ls = 0.25;
  const SamplePlan p = plan_sample_sizes(1e-2, 1.0, c);
  EXPECT_EQ(p.n_g, 25000u);
  EXPECT_EQ(p.n_h, 300u);
  EXPECT_NEAR(p.eps_eig, 0.005, 1e-15);
  EXPECT_NEAR(p.eps_ls, 0.0025, 1e-15);
}

TEST(PlanSampleSizes, Refusals) {
  EXPECT_THROW(plan_sample_sizes(1e-2, 0.5), ContractViolation);
  EXPECT_THROW(plan_sample_sizes(1e-2, 2.5), ContractViolation);
  EXPECT_THROW(plan_sample_sizes(0.0, 1.0), ContractViolation);
  PlannerConstants c;
  c.c_g = -1.0;
  EXPECT_THROW(plan_sample_sizes(1e-2, 1.0, c), ContractViolation);
}

TEST(PredictedIterations, ThreeRegimes) {
  EXPECT_EQ(predicted_iterations(1e-4, 1.0), 100u);
  EXPECT_EQ(predicted_iterations(1e-4, 1.5), 10u);
  EXPECT_EQ(predicted_iterations(1e-4, 2.0), 3u);
  EXPECT_EQ(predicted_iterations(1e-4, 4.0 / 3.0), static_cast<std::uint64_t>(std::ceil(std::pow(1e-4, 1.0 - 3.0 / (8.0 / 3.0)))));
  EXPECT_EQ(predicted_iterations(2.0, 1.0), 1u);
}

TEST(PredictedIterations, MonotoneInEps) {
  for (double a : {1.0, 1.2, 1.5, 1.8}) {
    std::uint64_t prev = 0;
    for (double e : {0.5, 1e-1, 1e-2, 1e-3, 1e-5}) {
      const std::uint64_t k = predicted_iterations(e, a);
      EXPECT_GE(k, prev);
      prev = k;
    }
  }
}

TEST(VrSchedule, Examples) {
  EXPECT_DOUBLE_EQ(vr_exponent(1.0), 4.0);
  EXPECT_EQ(vr_schedule(2, 4, 1.0, 1.0), 4u);
  EXPECT_EQ(vr_schedule(4, 4, 1.0, 1.0), 256u);
  EXPECT_EQ(vr_schedule(5, 4, 0.0, 1.0), 4u);
  PlannerConstants c;
  c.n_floor = 7;
  EXPECT_EQ(vr_schedule(6, 4, 0.0, 1.0, c), 7u);
  EXPECT_EQ(vr_schedule(6, 4, 0.5, 1.0, c), static_cast<std::uint64_t>(0.25 * 4 * 256));
  EXPECT_THROW(vr_exponent(1.5), ContractViolation);
  EXPECT_THROW(vr_schedule(0, 4, 1.0, 1.0), ContractViolation);
}

TEST(VrSchedule, CheckpointBatchAndPeriod) {
  EXPECT_EQ(vr_checkpoint_batch(2, 1.0), 16u);
  EXPECT_EQ(vr_checkpoint_period(16, 1.0), 16);
  EXPECT_EQ(vr_checkpoint_period(1, 1.2), 1);
  EXPECT_GE(vr_checkpoint_period(100, 8.0 / 7.0), 1);
}

TEST(TolerantCeil, IgnoresRepresentationNoise) {
  EXPECT_EQ(tolerant_ceil(10000.000000000002), 10000u);
  EXPECT_EQ(tolerant_ceil(10000.01), 10001u);
  EXPECT_EQ(tolerant_ceil(0.0), 1u);
  EXPECT_EQ(tolerant_ceil(2.0), 2u);
}

TEST(PlanTolerances, TinyEpsDoesNotOverflow) {
  EXPECT_THROW(plan_sample_sizes(1e-16, 4.0 / 3.0), NumericError);
  const SamplePlan p = plan_tolerances(1e-16, 4.0 / 3.0);
  EXPECT_EQ(p.n_g, 1u);
  EXPECT_EQ(p.n_h, 1u);
  EXPECT_NEAR(p.eps_eig, 1e-12, 1e-24);
  EXPECT_NEAR(p.eps_ls, 1e-12, 1e-24);
  const SamplePlan q = plan_sample_sizes(1e-2, 2.0);
  const SamplePlan r = plan_tolerances(1e-2, 2.0);
  EXPECT_EQ(q.eps_eig, r.eps_eig);
  EXPECT_EQ(q.eps_ls, r.eps_ls);
}
