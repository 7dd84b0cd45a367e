#include <gtest/gtest.h>

#include <random>

#include "safetube/builtin.hpp"
#include "safetube/errors.hpp"
#include "safetube/metric.hpp"

using namespace safetube;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

SampleSpec box_spec(int n, double r, int count) {
  SampleSpec s;
  s.region = SafeSet::linf_ball(n, r);
  s.count = count;
  s.seed = 3;
  return s;
}

}  // namespace

TEST(Metric, Example2InverseByHand) {
  const BuiltinExample ex = builtin_example("ex2");
  const MetricEval ev = eval_metric(ex.metric, Vec::Zero(2));
  const double det = 4.26 * 3.77 - 0.93 * 0.93;
  EXPECT_NEAR(det, 15.1953, 1e-12);
  EXPECT_NEAR(ev.M(0, 0), 3.77 / det, 1e-12);
  EXPECT_NEAR(ev.M(0, 1), 0.93 / det, 1e-12);
  EXPECT_NEAR(ev.M(1, 1), 4.26 / det, 1e-12);
  for (const Mat& d : ev.dM) EXPECT_EQ(d.norm(), 0.0);
  EXPECT_TRUE(ex.metric.is_constant());
}

TEST(Metric, Example1DualLiteral) {
  const BuiltinExample ex = builtin_example("ex1");
  const Mat w = ex.metric.dual(vec({0.1, 0.0, 0.0}));
  Mat expected(3, 3);
  expected << 0.2, -0.041, -0.01,
      -0.041, 0.2281, -0.009,
      -0.01, -0.009, 0.227;
  EXPECT_LE((w - expected).norm(), 1e-14);
  EXPECT_FALSE(ex.metric.is_constant());
}

TEST(Metric, IdentityFieldIsFlat) {
  const MetricField id = MetricField::constant(Mat::Identity(3, 3), 1.0, 1.0, 1.0);
  const MetricEval ev = eval_metric(id, vec({1.0, 2.0, 3.0}));
  EXPECT_EQ(ev.M, Mat::Identity(3, 3));
  const MetricFactors fac = factorize(id, Vec::Zero(3));
  EXPECT_EQ(fac.theta, Mat::Identity(3, 3));
}

TEST(Metric, MetricPartialsMatchFiniteDifferences) {
  const BuiltinExample ex = builtin_example("ex1");
  std::mt19937_64 rng(11);
  for (int s = 0; s < 50; ++s) {
    const Vec x = ex.metric_domain.sample(rng);
    const MetricEval ev = eval_metric(ex.metric, x);
    const auto fd = fd_partials([&](const Vec& y) { return Mat(ex.metric.dual(y).inverse()); }, x);
    for (int i = 0; i < 3; ++i) EXPECT_LE((ev.dM[i] - fd[i]).norm(), 1e-6 * ev.M.norm());
    EXPECT_LE((ev.M * ev.W - Mat::Identity(3, 3)).norm(), 1e-12);
  }
}

TEST(Metric, FactorsReproduceMetric) {
  for (const std::string id : {"ex1", "ex2"}) {
    const BuiltinExample ex = builtin_example(id);
    std::mt19937_64 rng(5);
    for (int s = 0; s < 20; ++s) {
      const Vec x = ex.metric_domain.sample(rng);
      const MetricEval ev = eval_metric(ex.metric, x);
      const MetricFactors fac = factorize(ex.metric, x);
      EXPECT_LE((fac.theta.transpose() * fac.theta - ev.M).norm(), 1e-10 * ev.M.norm());
      EXPECT_LE((fac.L.transpose() * fac.L - ev.W).norm(), 1e-10 * ev.W.norm());
      EXPECT_NEAR(fac.theta(0, 0), std::sqrt(ev.M(0, 0)), 1e-12);
    }
  }
}

TEST(Metric, IndefiniteDualIsADomainError) {
  Mat w(2, 2);
  w << 1.0, 2.0, 2.0, 1.0;
  const MetricField bad = MetricField::constant(w, 1.0, 0.1, 1.0);
  EXPECT_THROW(eval_metric(bad, Vec::Zero(2)), MetricDomainError);
}

TEST(Metric, ExpandingFlowFailsContraction) {
  DynamicsModel m;
  m.n = 2;
  m.m = 1;
  m.f = [](const Vec& x) { return Vec(x); };
  m.B = [](const Vec&) { return Mat(vec({1.0, 0.0})); };
  const MetricField id = MetricField::constant(Mat::Identity(2, 2), 1.0, 1.0, 1.0);
  const CcmCheckReport r = ccm_check(m, id, box_spec(2, 1.0, 200));
  EXPECT_FALSE(r.contraction_ok);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.contraction_max_eig, 2.0 + 2.0, 1e-9);
  EXPECT_FALSE(r.violations.empty());
}

TEST(Metric, StableLinearSystemPasses) {
  DynamicsModel m;
  m.n = 2;
  m.m = 1;
  m.f = [](const Vec& x) { return Vec(-2.0 * x); };
  m.B = [](const Vec&) { return Mat(vec({1.0, 0.0})); };
  const MetricField id = MetricField::constant(Mat::Identity(2, 2), 1.0, 1.0, 1.0);
  const CcmCheckReport r = ccm_check(m, id, box_spec(2, 1.0, 200));
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.contraction_max_eig, -4.0 + 2.0, 1e-9);
  EXPECT_EQ(r.killing_residual.size(), 1u);
  EXPECT_EQ(r.killing_residual[0], 0.0);
}

TEST(Metric, InflatedRateFailsExample2) {
  const BuiltinExample ex = builtin_example("ex2");
  const CcmCheckReport r = ccm_check(ex.model, ex.metric.with_lambda(17.4), box_spec(2, 5.0, 500));
  EXPECT_FALSE(r.contraction_ok);
  EXPECT_FALSE(r.pass);
}

TEST(Metric, Example2PassesWithSlightlySmallerRate) {
  const BuiltinExample ex = builtin_example("ex2");
  const CcmCheckReport r = ccm_check(ex.model, ex.metric.with_lambda(1.739), box_spec(2, 5.0, 2000));
  EXPECT_TRUE(r.eigen_ok);
  EXPECT_TRUE(r.killing_ok);
  EXPECT_TRUE(r.contraction_ok) << r.contraction_max_eig;
}

TEST(Metric, EigenBoundsOutsideDomainAreRejected) {
  const BuiltinExample ex = builtin_example("ex1");
  EXPECT_NO_THROW(validate_eigen_bounds(ex.metric, box_spec(3, 0.09, 2000)));
  MetricField tight = MetricField::from_polynomial(example1_dual_metric(), 1.0, 4.5, 5.0);
  EXPECT_THROW(validate_eigen_bounds(tight, box_spec(3, 0.09, 500)), MetricDomainError);
}

TEST(Metric, DualFClosedFormForExample2) {
  const BuiltinExample ex = builtin_example("ex2");
  const Mat f = dual_F(ex.model, ex.metric, Vec::Zero(2));
  Mat expected(2, 2);
  expected << 2.5848, -11.2664, -11.2664, 48.8596;
  EXPECT_LE((f - expected).norm(), 1e-10);
}

TEST(Metric, DualFOfSkewFlowOnFlatMetricIsPureRateTerm) {
  DynamicsModel m;
  m.n = 2;
  m.m = 1;
  m.f = [](const Vec& x) { return Vec(vec({x(1), -x(0)})); };
  m.B = [](const Vec&) { return Mat(vec({1.0, 0.0})); };
  const MetricField id = MetricField::constant(Mat::Identity(2, 2), 0.5, 1.0, 1.0);
  EXPECT_LE((dual_F(m, id, vec({0.3, -0.2})) - Mat::Identity(2, 2)).norm(), 1e-9);
}

TEST(Metric, DualFDirectionalDerivativeMatchesFiniteDifference) {
  const BuiltinExample ex = builtin_example("ex1");
  const Vec x = vec({0.05, -0.03, 0.02});
  const Vec fx = ex.model.f(x);
  const double h = 1e-6;
  const Mat dfw = (ex.metric.dual(x + h * fx) - ex.metric.dual(x - h * fx)) / (2.0 * h);
  const Mat a = ex.model.drift_jacobian(x);
  const Mat w = ex.metric.dual(x);
  const Mat expected = -dfw + a * w + w * a.transpose() + 2.0 * ex.metric.lambda() * w;
  EXPECT_LE((dual_F(ex.model, ex.metric, x) - expected).norm(), 1e-8);
}

TEST(Metric, SamplePointsAreDeterministic) {
  SampleSpec s = box_spec(3, 0.5, 100);
  s.grid_per_dim = 3;
  const auto a = sample_points(s);
  const auto b = sample_points(s);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_GE(a.size(), 100u + 27u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}
