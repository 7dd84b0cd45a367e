#pragma once

#include "safetube/models.hpp"

namespace safetube {

/// J = sum_k dt/2 [(x_k - g)^T Q (x_k - g) + u_k^T R u_k] + 1/2 (x_N - g)^T Q_f (x_N - g)
struct IlqrCost {
  Mat Q;
  Mat R;
  Mat Qf;
};

struct IlqrOptions {
  int max_iterations = 500;
  double tolerance = 1e-8;  ///< stop when the accepted cost decrease falls below this
  double reg_init = 1e-6;
  double reg_max = 1e10;
};

struct IlqrStats {
  int iterations = 0;
  double cost = 0.0;
  bool converged = false;
};

/// iLQR on the RK4 discretization of the nominal dynamics. The last input of the returned
/// trajectory repeats the final control so that states and inputs have equal length.
/// Throws PlannerFailure when no descent step exists at maximum regularization.
DesiredTrajectory ilqr_plan(const DynamicsModel& model, const IlqrCost& cost, const Vec& x0, const Vec& target,
                            double horizon, double dt, const IlqrOptions& options = {}, IlqrStats* stats = nullptr);

}  // namespace safetube
