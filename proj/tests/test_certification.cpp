#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "safetube/builtin.hpp"
#include "safetube/certification.hpp"
#include "safetube/errors.hpp"

using namespace safetube;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

DeltaConstants deltas_at_origin(const BuiltinExample& ex, double rho, double omega = 50.0, bool nominal = false) {
  const int n = ex.model.n;
  const DesiredTrajectory traj = DesiredTrajectory::constant(Vec::Zero(n), Vec::Zero(ex.model.m), 0.01, 1.0);
  const L1Config l1 = L1Config::with_defaults(n, omega, 1e6, 1.0);
  DeltaSampling s;
  s.time_points = 20;
  s.ball_points = 200;
  AssumptionBounds b = ex.bounds;
  if (nominal) b = AssumptionBounds{};
  return estimate_deltas(nominal ? ex.model.nominal() : ex.model, ex.metric, b, rho, traj, l1, s);
}

/// L1 norm of t -> c e^{-omega t} by trapezoid integration.
double exp_l1_norm(double c, double omega) {
  const int steps = 200000;
  const double T = 40.0 / omega;
  const double h = T / steps;
  double acc = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
    acc += w * std::abs(c * std::exp(-omega * k * h));
  }
  return acc * h;
}

}  // namespace

TEST(Certification, Example1UserBoundsAreKept) {
  const BuiltinExample ex = builtin_example("ex1");
  const DeltaConstants d = deltas_at_origin(ex, 0.03);
  EXPECT_EQ(d.B.value, 1.0);
  EXPECT_EQ(d.B.source, Provenance::User);
  EXPECT_EQ(d.h.value, 0.1);
  EXPECT_EQ(d.ht.value, 0.2);
  EXPECT_EQ(d.hx.value, 0.0);
  EXPECT_EQ(d.ustar.value, 0.0);
  EXPECT_EQ(d.Mx.source, Provenance::Sampled);
  EXPECT_GT(d.Mx.value, 0.0);
  EXPECT_EQ(d.f.inflation, 1.1);
  EXPECT_STREQ(to_string(d.f.source), "sampled");
}

TEST(Certification, SampledDriftBoundCoversDenseOracle) {
  const BuiltinExample ex = builtin_example("ex1");
  const double rho = 0.03;
  const DeltaConstants d = deltas_at_origin(ex, rho);
  std::mt19937_64 rng(99);
  const SafeSet ball = SafeSet::ball(Vec::Zero(3), rho);
  double sup_f = 0.0, sup_fx = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const Vec x = ball.sample(rng);
    sup_f = std::max(sup_f, ex.model.f(x).norm());
    sup_fx = std::max(sup_fx, norm2(ex.model.drift_jacobian(x)));
  }
  EXPECT_GE(d.f.value, sup_f);
  EXPECT_LE(d.f.value, 1.1 * sup_f * (1.0 + 1e-12));
  EXPECT_GE(d.fx.value, sup_fx);
  EXPECT_LE(d.fx.value, 1.1 * sup_fx * (1.0 + 1e-12));
}

TEST(Certification, Example2InputBound) {
  const BuiltinExample ex = builtin_example("ex2");
  const DeltaConstants d = deltas_at_origin(ex, 0.5);
  EXPECT_NEAR(d.B.value, 2.0616, 1e-4);
  EXPECT_EQ(d.Mx.value, 0.0);
  EXPECT_EQ(d.Mx.source, Provenance::ClosedForm);
  // B^+ = B^T / |B|^2
  EXPECT_NEAR(d.B_pinv.value, 1.1 / std::sqrt(4.25), 1e-12);
  EXPECT_EQ(d.B_pinv_x.value, 0.0);
}

TEST(Certification, ZetaVanishesWithoutUncertainty) {
  const BuiltinExample ex = builtin_example("ex2");
  const DeltaConstants d = deltas_at_origin(ex, 0.5, 50.0, true);
  const Zeta z = zeta(50.0, d, 0.5);
  EXPECT_EQ(z.z1, 0.0);
  EXPECT_EQ(z.z2, 0.0);
  EXPECT_EQ(z.z3, 0.0);
}

TEST(Certification, ZetaDecreasesWithBandwidth) {
  const BuiltinExample ex = builtin_example("ex1");
  const DeltaConstants d = deltas_at_origin(ex, 0.03);
  double prev = std::numeric_limits<double>::infinity();
  for (double w = 2.5; w < 1e4; w *= 1.5) {
    const Zeta z = zeta(w, d.with_bandwidth(w), 0.03);
    EXPECT_LT(z.z1, prev);
    prev = z.z1;
  }
}

TEST(Certification, ZetaPoleIsRejected) {
  const BuiltinExample ex = builtin_example("ex1");
  const DeltaConstants d = deltas_at_origin(ex, 0.03);
  EXPECT_THROW(zeta(2.0 * ex.metric.lambda(), d, 0.03), CertificateError);
}

TEST(Certification, FilterNormsMatchImpulseResponses) {
  const double w = 37.0;
  // C: w e^{-wt};  I - C: delta - w e^{-wt};  sC: w delta - w^2 e^{-wt}
  EXPECT_NEAR(filter_norm_C(), exp_l1_norm(w, w), 1e-6);
  EXPECT_NEAR(filter_norm_I_minus_C(), 1.0 + exp_l1_norm(w, w), 1e-6);
  EXPECT_NEAR(filter_norm_sC(w), w + exp_l1_norm(w * w, w), 1e-4);
}

TEST(Certification, TubeRadiiAndUltimateBounds) {
  const BuiltinExample ex = builtin_example("ex1");
  const Vec x0 = vec({0.01, -0.01, 0.01});
  const double rho = candidate_rho(ex.metric, 0.01, 0.01, x0, Vec::Zero(3));
  const DeltaConstants d = deltas_at_origin(ex, rho);
  const TubeCertificate c = check_conditions(TubeInputs{50.0, 5e6, 0.01, 0.01, x0, Vec::Zero(3)}, d, ex.metric);
  EXPECT_NEAR(c.rho, c.rho_r + c.rho_a, 1e-15);
  EXPECT_NEAR(c.rho, rho, 1e-15);
  EXPECT_FALSE(c.rho_mismatch);
  EXPECT_NEAR(c.rho_r, std::sqrt(5.88 / 3.85) * x0.norm() + 0.01, 1e-15);
  EXPECT_NEAR(c.mu(0.0), std::sqrt(c.energy0 / 3.85 + c.zeta.z1), 1e-15);
  EXPECT_GT(c.margin_a, 0.0);
  for (double T : {0.0, 1.0, 10.0}) {
    EXPECT_LE(c.mu(T), c.rho_r);
    EXPECT_NEAR(ultimate_bounds(c, T).delta, c.mu(T) + 0.01, 1e-15);
  }
  EXPECT_GE(c.mu(0.0), c.mu(5.0));
}

TEST(Certification, UltimateBoundStartsAtZetaWhenStartingOnTrajectory) {
  const BuiltinExample ex = builtin_example("ex1");
  const DeltaConstants d = deltas_at_origin(ex, 0.02);
  const TubeCertificate c =
      check_conditions(TubeInputs{50.0, 5e6, 0.01, 0.01, Vec::Zero(3), Vec::Zero(3)}, d, ex.metric);
  EXPECT_EQ(c.energy0, 0.0);
  EXPECT_NEAR(c.mu(0.0), std::sqrt(c.zeta.z1), 1e-15);
  EXPECT_NEAR(c.mu(0.0), c.mu(100.0), 1e-15);
}

TEST(Certification, AdaptationRateScalesWithInverseSquareOfRadius) {
  const BuiltinExample ex = builtin_example("ex1");
  const DeltaConstants d = deltas_at_origin(ex, 0.03);
  const Vec x0 = Vec::Zero(3);
  const TubeCertificate a = check_conditions(TubeInputs{100.0, 1.0, 0.02, 0.01, x0, x0}, d, ex.metric);
  const TubeCertificate b = check_conditions(TubeInputs{100.0, 1.0, 0.02, 0.001, x0, x0}, d, ex.metric);
  ASSERT_GT(a.margin_b, 0.0);
  EXPECT_NEAR(b.gamma_required / a.gamma_required, 100.0, 1e-9);
  EXPECT_TRUE(b.rho_mismatch);
}

TEST(Certification, SearchIsSelfConsistent) {
  const BuiltinExample ex = builtin_example("ex1");
  const Vec x0 = vec({0.01, -0.01, 0.01});
  const double rho = candidate_rho(ex.metric, 0.01, 0.01, x0, Vec::Zero(3));
  const DeltaConstants d = deltas_at_origin(ex, rho);
  const SearchResult r = search_params(d, ex.metric, 0.01, 0.01, x0, Vec::Zero(3), 1.0, 1e5);
  ASSERT_TRUE(r.feasible);
  EXPECT_TRUE(r.certificate.valid);
  EXPECT_GT(r.omega, 2.0 * ex.metric.lambda());
  EXPECT_GT(r.certificate.margin_a, 0.0);
  EXPECT_GT(r.certificate.margin_b, 0.0);
  EXPECT_GT(r.certificate.margin_c, 0.0);
  EXPECT_GE(r.gamma, r.certificate.gamma_required);
}

TEST(Certification, TighterTubesNeedFasterAdaptation) {
  const BuiltinExample ex = builtin_example("ex1");
  const Vec x0 = Vec::Zero(3);
  const DeltaConstants d = deltas_at_origin(ex, 0.03);
  double prev_omega = 0.0;
  for (double eps : {0.02, 0.015, 0.01}) {
    const SearchResult r = search_params(d, ex.metric, eps, 0.01, x0, x0, 1.0, 1e6);
    ASSERT_TRUE(r.feasible) << eps;
    EXPECT_GT(r.omega, prev_omega);
    prev_omega = r.omega;
  }
  double prev_gamma = 0.0;
  for (double rho_a : {0.02, 0.01, 0.005}) {
    const SearchResult r = search_params(d, ex.metric, 0.02, rho_a, x0, x0, 1.0, 1e6);
    ASSERT_TRUE(r.feasible) << rho_a;
    EXPECT_GT(r.gamma, prev_gamma);
    prev_gamma = r.gamma;
  }
}

TEST(Certification, Example2LowBandwidthIsRejected) {
  const BuiltinExample ex = builtin_example("ex2");
  const Vec x0 = vec({3.4, -2.4});
  const double rho = candidate_rho(ex.metric, 0.4, 0.1, x0, x0);
  const DeltaConstants d = deltas_at_origin(ex, rho);
  const TubeCertificate c = check_conditions(TubeInputs{10.0, 4e7, 0.4, 0.1, x0, x0}, d, ex.metric);
  EXPECT_FALSE(c.valid);
  EXPECT_FALSE(c.binding.empty());
}

TEST(Certification, InvalidInputsAreContractViolations) {
  const BuiltinExample ex = builtin_example("ex1");
  const DeltaConstants d = deltas_at_origin(ex, 0.03);
  EXPECT_THROW(check_conditions(TubeInputs{50.0, 1.0, 0.0, 0.01, Vec::Zero(3), Vec::Zero(3)}, d, ex.metric),
               ContractViolation);
  EXPECT_THROW(search_params(d, ex.metric, 0.01, 0.01, Vec::Zero(3), Vec::Zero(3), 10.0, 1.0), ContractViolation);
}
