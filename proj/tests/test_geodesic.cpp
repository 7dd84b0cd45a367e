#include <gtest/gtest.h>

#include <random>

#include "safetube/builtin.hpp"
#include "safetube/errors.hpp"
#include "safetube/geodesic.hpp"

using namespace safetube;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(Geodesic, CoincidentEndpointsGiveTrivialCurve) {
  const BuiltinExample ex = builtin_example("ex1");
  const Vec p = vec({0.01, 0.02, -0.03});
  const GeodesicCurve c = solve_geodesic(ex.metric, p, p);
  EXPECT_EQ(c.energy, 0.0);
  EXPECT_EQ(c.iterations, 0);
  for (const Vec& v : c.velocities) EXPECT_EQ(v.norm(), 0.0);
  for (const Vec& node : c.nodes) EXPECT_EQ(node, p);
}

TEST(Geodesic, FlatMetricGivesStraightLine) {
  const BuiltinExample ex = builtin_example("ex2");
  const Vec p = vec({3.4, -2.4});
  const Vec q = vec({-1.0, 0.5});
  const GeodesicCurve c = solve_geodesic(ex.metric, p, q);
  const Mat m = example2_dual_metric().inverse();
  const Vec d = q - p;
  EXPECT_NEAR(c.energy, d.dot(m * d), 1e-8);
  for (int i = 0; i < static_cast<int>(c.nodes.size()); ++i) {
    EXPECT_LE((c.nodes[i] - (p + c.s(i) * d)).norm(), 1e-8);
    EXPECT_LE((c.velocities[i] - d).norm(), 1e-8);
  }
  EXPECT_TRUE(c.converged);
  EXPECT_FALSE(c.exceeds_upper_bound);
}

TEST(Geodesic, FlatEnergyScalesQuadratically) {
  const BuiltinExample ex = builtin_example("ex2");
  const Vec d = vec({0.7, 0.2});
  const double e1 = solve_geodesic(ex.metric, Vec::Zero(2), d).energy;
  for (double c : {0.1, 2.0, 5.0}) {
    EXPECT_NEAR(solve_geodesic(ex.metric, Vec::Zero(2), c * d).energy, c * c * e1, 1e-9 * c * c);
  }
}

TEST(Geodesic, EnergyRespectsMetricBounds) {
  const BuiltinExample ex = builtin_example("ex1");
  std::mt19937_64 rng(21);
  GeodesicSolver solver(ex.metric);
  for (int s = 0; s < 30; ++s) {
    const Vec p = ex.metric_domain.sample(rng);
    const Vec q = ex.metric_domain.sample(rng);
    const double d2 = (p - q).squaredNorm();
    const GeodesicCurve c = solver.solve(p, q);
    EXPECT_TRUE(c.converged);
    EXPECT_GE(c.energy, 0.99 * ex.metric.alpha_lower() * d2);
    EXPECT_LE(c.energy, 1.01 * ex.metric.alpha_upper() * d2);
  }
}

TEST(Geodesic, EnergyIsSymmetric) {
  const BuiltinExample ex = builtin_example("ex1");
  const Vec p = vec({0.08, -0.05, 0.03});
  const Vec q = vec({-0.07, 0.06, -0.02});
  const double e_pq = solve_geodesic(ex.metric, p, q).energy;
  const double e_qp = solve_geodesic(ex.metric, q, p).energy;
  EXPECT_NEAR(e_pq, e_qp, 1e-6 * e_pq);
}

TEST(Geodesic, CurveHasNearlyConstantMetricSpeed) {
  const BuiltinExample ex = builtin_example("ex1");
  const GeodesicCurve c = solve_geodesic(ex.metric, vec({0.09, 0.09, 0.09}), vec({-0.09, -0.09, -0.09}));
  const auto speeds = c.metric_speeds(ex.metric);
  const double lo = *std::min_element(speeds.begin(), speeds.end());
  const double hi = *std::max_element(speeds.begin(), speeds.end());
  EXPECT_LE(hi / lo, 1.02);
}

TEST(Geodesic, DiscreteMinimumBeatsPerturbations) {
  const BuiltinExample ex = builtin_example("ex1");
  GeodesicSolver solver(ex.metric);
  const GeodesicCurve c = solver.solve(vec({0.05, 0.0, 0.0}), vec({-0.05, 0.05, 0.02}));
  Mat nodes(c.nodes.size(), 3);
  for (std::size_t i = 0; i < c.nodes.size(); ++i) nodes.row(i) = c.nodes[i].transpose();
  EXPECT_NEAR(solver.energy_of(nodes), c.energy, 1e-12);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1e-3);
  for (int k = 0; k < 20; ++k) {
    Mat pert = nodes;
    for (Eigen::Index i = 1; i + 1 < pert.rows(); ++i)
      for (int j = 0; j < 3; ++j) pert(i, j) += g(rng);
    EXPECT_GE(solver.energy_of(pert), c.energy - 1e-12);
  }
}

TEST(Geodesic, WarmStartConvergesQuickly) {
  const BuiltinExample ex = builtin_example("ex1");
  GeodesicSolver solver(ex.metric);
  const Vec p = vec({0.0, 0.0, 0.0});
  Vec q = vec({0.05, -0.04, 0.03});
  GeodesicCurve prev = solver.solve(p, q);
  for (int k = 0; k < 10; ++k) {
    q += vec({1e-3, 5e-4, -7e-4});
    const GeodesicCurve next = solver.solve(p, q, &prev);
    EXPECT_LE(next.iterations, 5);
    EXPECT_TRUE(next.converged);
    prev = next;
  }
}

TEST(Geodesic, EndpointVelocityBoundedByEnergy) {
  const BuiltinExample ex = builtin_example("ex1");
  const GeodesicCurve c = solve_geodesic(ex.metric, vec({0.06, -0.02, 0.01}), vec({-0.04, 0.05, 0.0}));
  for (CurveEnd e : {CurveEnd::Start, CurveEnd::End}) {
    EXPECT_LE(endpoint_velocity(c, e).squaredNorm(), 1.02 * c.energy / ex.metric.alpha_lower());
  }
}

TEST(Geodesic, DifferentiationMatrixIsExactOnCubics) {
  for (int n : {4, 8, 12}) {
    const Mat d = spline_differentiation_matrix(n);
    Vec s(n + 1), p(n + 1), dp(n + 1);
    for (int i = 0; i <= n; ++i) {
      s(i) = static_cast<double>(i) / n;
      p(i) = 2.0 - s(i) + 3.0 * s(i) * s(i) - 4.0 * s(i) * s(i) * s(i);
      dp(i) = -1.0 + 6.0 * s(i) - 12.0 * s(i) * s(i);
    }
    EXPECT_LE((d * p - dp).lpNorm<Eigen::Infinity>(), 1e-10) << n;
    EXPECT_LE((d * Vec::Ones(n + 1)).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(Geodesic, SplineQuadratureIsExactOnCubics) {
  const int n = 8;
  const SplineQuadrature q = spline_quadrature(n);
  Vec y(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    y(i) = s * s * s - 0.5 * s;
  }
  const Vec x = q.positions * y;
  const Vec v = q.velocities * y;
  EXPECT_NEAR(q.weights.sum(), 1.0, 1e-15);
  // int_0^1 (s^3 - s/2) ds = 0,  int_0^1 (3 s^2 - 1/2)^2 ds = 9/5 - 1 + 1/4
  EXPECT_NEAR(q.weights.dot(x), 0.0, 1e-14);
  EXPECT_NEAR(q.weights.dot(v.cwiseProduct(v)), 1.8 - 1.0 + 0.25, 1e-12);
}

TEST(Geodesic, ZigZagNodesCarryEnergy) {
  const MetricField id = MetricField::constant(Mat::Identity(1, 1), 1.0, 1.0, 1.0);
  GeodesicSolver solver(id);
  Mat nodes = Mat::Zero(9, 1);
  for (int i = 1; i < 8; ++i) nodes(i, 0) = (i % 2 ? 1e-2 : -1e-2);
  EXPECT_GT(solver.energy_of(nodes), 1e-3);
}

TEST(Geodesic, DimensionMismatchIsAContractViolation) {
  const BuiltinExample ex = builtin_example("ex2");
  EXPECT_THROW(solve_geodesic(ex.metric, Vec::Zero(2), Vec::Zero(3)), ContractViolation);
}
