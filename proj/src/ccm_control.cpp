#include "safetube/ccm_control.hpp"

#include <cmath>

#include "safetube/errors.hpp"

namespace safetube {

namespace {

constexpr double kDegenerateGradient = 1e-10;

}  // namespace

CcmFeedbackResult feedback_gain(const DynamicsModel& model, const MetricField& field, const Vec& x_star,
                                const Vec& u_star, const Vec& x, const GeodesicCurve& geo) {
  if (x.size() != model.n || x_star.size() != model.n || u_star.size() != model.m) {
    throw ContractViolation("feedback_gain: dimension mismatch");
  }
  CcmFeedbackResult r;
  r.k_c = Vec::Zero(model.m);
  r.energy = geo.energy;
  r.a = Vec::Zero(model.m);
  if (geo.energy == 0.0) return r;

  const Vec gs0 = endpoint_velocity(geo, CurveEnd::Start);
  const Vec gs1 = endpoint_velocity(geo, CurveEnd::End);
  const Mat m_x = eval_metric(field, x).M;
  const Mat m_star = eval_metric(field, x_star).M;
  const Vec Mg1 = m_x * gs1;

  r.a = 2.0 * model.input_matrix(x).transpose() * Mg1;
  r.b = -2.0 * field.lambda() * geo.energy - 2.0 * Mg1.dot(model.nominal_rate(x, u_star)) +
        2.0 * gs0.dot(m_star * model.nominal_rate(x_star, u_star));

  if (r.b >= 0.0) {
    r.slack = -r.b;
    return r;
  }
  r.active = true;
  const double a2 = r.a.squaredNorm();
  if (std::sqrt(a2) < kDegenerateGradient) {
    r.infeasible = true;
    r.slack = -r.b;
    return r;
  }
  r.k_c = r.a * (r.b / a2);
  r.slack = r.a.dot(r.k_c) - r.b;
  return r;
}

}  // namespace safetube
