#pragma once

#include "safetube/geodesic.hpp"
#include "safetube/models.hpp"

namespace safetube {

/// Min-norm solution of  min |k|^2  s.t.  a^T k <= b.
struct CcmFeedbackResult {
  Vec k_c;
  Vec a;
  double b = 0.0;
  /// a^T k_c - b after feedback; <= 0 when the contraction constraint holds.
  double slack = 0.0;
  bool active = false;
  /// Constraint binding but |a| vanished; k_c was set to zero.
  bool infeasible = false;
  double energy = 0.0;
};

CcmFeedbackResult feedback_gain(const DynamicsModel& model, const MetricField& field, const Vec& x_star,
                                const Vec& u_star, const Vec& x, const GeodesicCurve& geo);

}  // namespace safetube
