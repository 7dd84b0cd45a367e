#pragma once

#include <array>

#include "safetube/models.hpp"

namespace safetube {

/// Solves A^T P + P A = -Q through its Kronecker form.
Mat solve_lyapunov(const Mat& a, const Mat& q);
bool is_hurwitz(const Mat& a);

struct L1Config {
  double omega = 50.0;   ///< low-pass filter bandwidth, rad/s
  double gamma = 1e6;    ///< adaptation rate
  double delta_h = 1.0;  ///< radius of the uncertainty set H
  double eps_proj = 0.1;
  Mat A_m;
  Mat Q;
  Mat P;

  /// Validates inputs and solves for P. Throws ContractViolation if A_m is not Hurwitz
  /// or Q is not symmetric positive definite.
  static L1Config make(double omega, double gamma, double delta_h, const Mat& A_m, const Mat& Q,
                       double eps_proj = 0.1);
  /// A_m = -10 I, Q = I.
  static L1Config with_defaults(int n, double omega, double gamma, double delta_h);

  /// Largest admissible estimate norm, sqrt(1 + eps_proj) * delta_h.
  double theta_max() const;
  double lyapunov_residual() const;
};

struct L1State {
  Vec x_hat;
  Vec sigma_hat;
  Vec u_a;
  Vec x_tilde;
  /// Number of radial clamps applied to sigma_hat.
  int clamp_events = 0;

  static L1State initial(const Vec& x0, int m);
};

/// Plant states at the four RK4 stages of one step (t, t + dt/2, t + dt/2, t + dt).
using StageStates = std::array<Vec, 4>;

/// Advances x_hat by one RK4 step of
///   x_hat' = f(x) + B(x)(u_c + u_a + sigma_hat) + A_m (x_hat - x),
/// with the true state x taken at the plant's own stage points, then refreshes
/// x_tilde = x_hat - x_next.
void predictor_step(const DynamicsModel& model, const L1Config& cfg, L1State& st, const StageStates& x_stages,
                    const Vec& x_next, const Vec& u_c, double dt);
/// Same as above with x held constant over the step.
void predictor_step(const DynamicsModel& model, const L1Config& cfg, L1State& st, const Vec& x, const Vec& u_c,
                    double dt);

/// Smooth projection onto the ball of radius theta_max(); y is returned unchanged when the
/// estimate is inside the radius-delta_h ball or y points inward.
Vec projection_op(const L1Config& cfg, const Vec& theta, const Vec& y);

/// sigma_hat <- sigma_hat + dt Gamma Proj(sigma_hat, -B(x)^T P x_tilde), then radial clamp.
void adaptation_step(const DynamicsModel& model, const L1Config& cfg, L1State& st, const Vec& x, double dt);

/// Exact zero-order-hold step of u_a' = -omega (u_a + sigma_hat).
void filter_step(const L1Config& cfg, L1State& st, double dt);

}  // namespace safetube
