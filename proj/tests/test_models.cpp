#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "safetube/builtin.hpp"
#include "safetube/errors.hpp"
#include "safetube/models.hpp"

using namespace safetube;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(Models, Example1AtOriginIsAtRest) {
  const DynamicsModel m = example1_model();
  EXPECT_EQ(eval_dynamics(m, 0.0, Vec::Zero(3), Vec::Zero(1)), Vec::Zero(3));
  EXPECT_EQ(eval_dynamics(m.nominal(), 0.0, Vec::Zero(3), Vec::Zero(1)), Vec::Zero(3));
}

TEST(Models, Example2HandEvaluation) {
  // f([1,0]) = [-1, -3], h = -2 sin(pi/2) - 0.1 * 1 = -2.1, B = [0.5, -2]
  const Vec r = eval_dynamics(example2_model(), M_PI / 4.0, vec({1.0, 0.0}), Vec::Zero(1));
  EXPECT_NEAR(r(0), -2.05, 1e-12);
  EXPECT_NEAR(r(1), 1.2, 1e-12);
  EXPECT_EQ(eval_dynamics(example2_model().nominal(), 0.0, Vec::Zero(2), Vec::Zero(1)), Vec::Zero(2));
}

TEST(Models, NominalEquilibriumGivesZeroRate) {
  DynamicsModel m;
  m.n = 2;
  m.m = 1;
  m.f = [](const Vec& x) { return Vec(-x); };
  m.B = [](const Vec&) { return Mat(Mat::Ones(2, 1)); };
  EXPECT_EQ(eval_dynamics(m, 1.0, Vec::Zero(2), Vec::Zero(1)), Vec::Zero(2));
}

TEST(Models, DimensionAndTimeContracts) {
  const DynamicsModel m = example2_model();
  EXPECT_THROW(eval_dynamics(m, 0.0, Vec::Zero(3), Vec::Zero(1)), ContractViolation);
  EXPECT_THROW(eval_dynamics(m, 0.0, Vec::Zero(2), Vec::Zero(2)), ContractViolation);
  EXPECT_THROW(eval_dynamics(m, -1.0, Vec::Zero(2), Vec::Zero(1)), ContractViolation);
}

TEST(Models, NonFiniteRateIsANumericFault) {
  DynamicsModel m;
  m.n = 1;
  m.m = 1;
  m.f = [](const Vec& x) { return Vec::Constant(1, 1.0 / x(0)); };
  m.B = [](const Vec&) { return Mat(Mat::Ones(1, 1)); };
  EXPECT_THROW(eval_dynamics(m, 0.0, Vec::Constant(1, 0.0), Vec::Zero(1)), NumericFault);
}

TEST(Models, ClosedFormJacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (const auto& m : {example1_model(), example2_model()}) {
    for (int s = 0; s < 100; ++s) {
      Vec x(m.n);
      for (int i = 0; i < m.n; ++i) x(i) = 3.0 * uni(rng);
      const Mat jac = m.drift_jacobian(x);
      const Mat fd = fd_jacobian(m.f, x);
      EXPECT_LE((jac - fd).norm(), 1e-5 * std::max(1.0, jac.norm())) << m.name;
      const auto db = m.input_partials(x);
      const auto dbfd = fd_partials(m.B, x);
      for (int i = 0; i < m.n; ++i) EXPECT_LE((db[i] - dbfd[i]).norm(), 1e-5);
    }
  }
}

TEST(Models, FiniteDifferenceFallback) {
  DynamicsModel m;
  m.n = 2;
  m.m = 1;
  m.f = [](const Vec& x) { return Vec(vec({std::sin(x(0)) * x(1), x(1) * x(1)})); };
  m.B = [](const Vec& x) { return Mat(vec({1.0, x(0)})); };
  const Vec x = vec({0.3, -0.7});
  Mat expected(2, 2);
  expected << std::cos(0.3) * -0.7, std::sin(0.3), 0.0, -1.4;
  EXPECT_LE((m.drift_jacobian(x) - expected).norm(), 1e-8);
  EXPECT_NEAR(m.input_partials(x)[0](1, 0), 1.0, 1e-8);
}

TEST(Models, PseudoInverseOfConstantInput) {
  const Mat b = example2_model().B(Vec::Zero(2));
  const Mat p = input_pseudo_inverse(b);
  EXPECT_NEAR((p * b)(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(p(0, 0), 0.5 / 4.25, 1e-14);
  EXPECT_NEAR(input_rank_margin(example2_model(), Vec::Zero(2)), std::sqrt(4.25), 1e-12);
}

TEST(Models, AssumptionBoundsValidation) {
  AssumptionBounds b;
  b.delta_f = -1.0;
  EXPECT_THROW(b.validate(false), ContractViolation);
  AssumptionBounds c;
  c.delta_h = 0.0;
  EXPECT_THROW(c.validate(true), ContractViolation);
  EXPECT_NO_THROW(c.validate(false));
}

TEST(Models, SafeSetErosionAndMembership) {
  const SafeSet box = SafeSet::linf_ball(2, 1.0);
  EXPECT_TRUE(box.contains(vec({0.9, -0.9})));
  const SafeSet e = box.eroded(0.2);
  EXPECT_FALSE(e.contains(vec({0.9, 0.0})));
  EXPECT_TRUE(e.contains(vec({0.8, 0.0})));
  EXPECT_THROW(box.eroded(1.5), ContractViolation);
  const SafeSet ball = SafeSet::ball(Vec::Zero(2), 1.0);
  EXPECT_FALSE(ball.eroded(0.5).contains(vec({0.4, 0.4})));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) EXPECT_TRUE(ball.contains(ball.sample(rng)));
}

TEST(Models, DesiredTrajectoryInterpolation) {
  std::vector<Vec> xs = {vec({0.0}), vec({1.0}), vec({3.0})};
  std::vector<Vec> us = {vec({5.0}), vec({6.0}), vec({6.0})};
  const DesiredTrajectory tr(0.5, xs, us);
  EXPECT_NEAR(tr.state_at(0.25)(0), 0.5, 1e-14);
  EXPECT_NEAR(tr.state_at(0.75)(0), 2.0, 1e-14);
  EXPECT_EQ(tr.input_at(0.49)(0), 5.0);
  EXPECT_EQ(tr.input_at(0.5)(0), 6.0);
  EXPECT_EQ(tr.state_at(10.0)(0), 3.0);
  EXPECT_DOUBLE_EQ(tr.horizon(), 1.0);
  EXPECT_EQ(tr.max_input_norm(), 6.0);
  EXPECT_THROW(DesiredTrajectory(0.5, xs, {vec({1.0})}), ContractViolation);
}

TEST(Models, RefinedTrajectoryIsConsistent) {
  const DynamicsModel m = example2_model();
  std::vector<Vec> xs = {vec({1.0, 0.5})};
  std::vector<Vec> us;
  for (int k = 0; k < 50; ++k) {
    const Vec u = Vec::Constant(1, std::cos(0.1 * k));
    us.push_back(u);
    xs.push_back(rk4_step([&](double, const Vec& x) { return m.nominal_rate(x, u); }, 0.0, xs.back(), 0.01));
  }
  us.push_back(us.back());
  const DesiredTrajectory tr(0.01, xs, us);
  EXPECT_LT(tr.consistency_residual(m), 1e-3);
  const DesiredTrajectory fine = tr.refined(m, 0.001);
  EXPECT_EQ(fine.size(), 501u);
  EXPECT_LT((fine.states().back() - xs.back()).norm(), 1e-7);
  EXPECT_LT(fine.consistency_residual(m), 1e-5);
}

TEST(Models, Rk4IsExactForCubicsInTime) {
  const auto rhs = [](double t, const Vec&) { return Vec::Constant(1, 3.0 * t * t); };
  EXPECT_NEAR(rk4_step(rhs, 0.0, Vec::Zero(1), 2.0)(0), 8.0, 1e-12);
}

TEST(Models, UnknownBuiltinIsAUsageError) {
  EXPECT_THROW(builtin_example("ex3"), UsageError);
  EXPECT_NO_THROW(builtin_example("ex1"));
}
