#include "safetube/builtin.hpp"

#include <cmath>

#include "safetube/errors.hpp"

namespace safetube {

namespace {

Polynomial poly3(std::vector<Polynomial::Term> terms) { return Polynomial(3, std::move(terms)); }

}  // namespace

DynamicsModel example1_model() {
  DynamicsModel m;
  m.name = "ex1";
  m.n = 3;
  m.m = 1;
  m.f = [](const Vec& x) {
    Vec out(3);
    out << -x(0) + x(2), x(0) * x(0) - 2.0 * x(0) * x(2) - x(1) + x(2), -x(1);
    return out;
  };
  m.jac_f = [](const Vec& x) {
    Mat a(3, 3);
    a << -1.0, 0.0, 1.0,
        2.0 * x(0) - 2.0 * x(2), -1.0, 1.0 - 2.0 * x(0),
        0.0, -1.0, 0.0;
    return a;
  };
  m.B = [](const Vec&) { return Mat(Vec::Unit(3, 2)); };
  m.dB = [](const Vec&) { return std::vector<Mat>(3, Mat::Zero(3, 1)); };
  m.h = [](double t, const Vec&) { return Vec::Constant(1, 0.1 * std::sin(2.0 * t)); };
  return m;
}

DynamicsModel example2_model() {
  DynamicsModel m;
  m.name = "ex2";
  m.n = 2;
  m.m = 1;
  m.f = [](const Vec& x) {
    Vec out(2);
    out << -x(0) + 2.0 * x(1), -0.25 * x(1) * x(1) * x(1) - 3.0 * x(0) + 4.0 * x(1);
    return out;
  };
  m.jac_f = [](const Vec& x) {
    Mat a(2, 2);
    a << -1.0, 2.0, -3.0, -0.75 * x(1) * x(1) + 4.0;
    return a;
  };
  m.B = [](const Vec&) {
    Mat b(2, 1);
    b << 0.5, -2.0;
    return b;
  };
  m.dB = [](const Vec&) { return std::vector<Mat>(2, Mat::Zero(2, 1)); };
  m.h = [](double t, const Vec& x) { return Vec::Constant(1, -2.0 * std::sin(2.0 * t) - 0.1 * x.norm()); };
  return m;
}

PolyMatrix example1_dual_metric() {
  PolyMatrix w(3, 3, 3);
  w.at(0, 0) = Polynomial::constant(3, 0.2);
  w.at(0, 1) = Polynomial::linear(3, 0, -0.41);
  w.at(0, 2) = Polynomial::constant(3, -0.01);
  w.at(1, 1) = poly3({{0.81, {2, 0, 0}}, {0.22, {0, 0, 0}}});
  w.at(1, 2) = poly3({{0.01, {1, 0, 0}}, {-0.01, {0, 0, 0}}});
  w.at(2, 2) = poly3({{0.07, {1, 0, 0}}, {0.22, {0, 0, 0}}});
  w.at(1, 0) = w.at(0, 1);
  w.at(2, 0) = w.at(0, 2);
  w.at(2, 1) = w.at(1, 2);
  return w;
}

Mat example2_dual_metric() {
  Mat w(2, 2);
  w << 4.26, -0.93, -0.93, 3.77;
  return w;
}

BuiltinExample builtin_example(const std::string& id) {
  if (id == "ex1") {
    AssumptionBounds b;
    b.delta_h = 0.1;
    b.delta_ht = 0.2;
    b.delta_hx = 0.0;
    b.delta_B = 1.0;
    b.delta_Bx = 0.0;
    b.delta_bx = 0.0;
    b.delta_ustar = 0.0;
    return BuiltinExample{example1_model(),
                          MetricField::from_polynomial(example1_dual_metric(), 1.0, 3.85, 5.88), b,
                          SafeSet::linf_ball(3, 0.1), SafeSet::linf_ball(3, 0.09)};
  }
  if (id == "ex2") {
    const Mat w = example2_dual_metric();
    Eigen::SelfAdjointEigenSolver<Mat> eig(w, Eigen::EigenvaluesOnly);
    const double alpha_lower = 1.0 / eig.eigenvalues()(1);
    const double alpha_upper = 1.0 / eig.eigenvalues()(0);
    AssumptionBounds b;
    b.delta_B = std::sqrt(0.5 * 0.5 + 2.0 * 2.0);
    b.delta_Bx = 0.0;
    b.delta_bx = 0.0;
    b.delta_hx = 0.1;
    b.delta_ht = 4.0;
    return BuiltinExample{example2_model(), MetricField::constant(w, 1.74, alpha_lower, alpha_upper), b,
                          SafeSet::linf_ball(2, 5.0), SafeSet::linf_ball(2, 5.0)};
  }
  throw UsageError("unknown builtin example '" + id + "' (expected ex1 or ex2)");
}

}  // namespace safetube
