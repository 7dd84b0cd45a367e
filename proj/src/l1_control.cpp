#include "safetube/l1_control.hpp"

#include <cmath>

#include "safetube/errors.hpp"

namespace safetube {

Mat solve_lyapunov(const Mat& a, const Mat& q) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || q.rows() != n || q.cols() != n) throw ContractViolation("solve_lyapunov: shape mismatch");
  const Mat I = Mat::Identity(n, n);
  // vec(A^T P + P A) = (I kron A^T + A^T kron I) vec(P)
  Mat K = Mat::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * a.transpose();
      K.block(i * n, j * n, n, n) += a(j, i) * I;
    }
  }
  const Vec rhs = -Eigen::Map<const Vec>(q.data(), n * n);
  const Vec p = K.fullPivLu().solve(rhs);
  return sym(Eigen::Map<const Mat>(p.data(), n, n));
}

bool is_hurwitz(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, false);
  return (es.eigenvalues().real().array() < 0.0).all();
}

L1Config L1Config::make(double omega, double gamma, double delta_h, const Mat& A_m, const Mat& Q, double eps_proj) {
  if (!(omega > 0.0)) throw ContractViolation("filter bandwidth must be positive");
  if (!(gamma > 0.0)) throw ContractViolation("adaptation rate must be positive");
  if (!(delta_h > 0.0)) throw ContractViolation("projection radius must be positive");
  if (!(eps_proj > 0.0)) throw ContractViolation("projection inflation must be positive");
  if (A_m.rows() != A_m.cols() || Q.rows() != A_m.rows() || Q.cols() != A_m.cols()) {
    throw ContractViolation("A_m and Q must be square of equal size");
  }
  if (!is_hurwitz(A_m)) throw ContractViolation("A_m is not Hurwitz");
  if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm()) || Eigen::LLT<Mat>(Q).info() != Eigen::Success) {
    throw ContractViolation("Q must be symmetric positive definite");
  }
  L1Config c;
  c.omega = omega;
  c.gamma = gamma;
  c.delta_h = delta_h;
  c.eps_proj = eps_proj;
  c.A_m = A_m;
  c.Q = Q;
  c.P = solve_lyapunov(A_m, Q);
  if (Eigen::LLT<Mat>(c.P).info() != Eigen::Success) throw NumericFault("Lyapunov solution is not positive definite");
  return c;
}

L1Config L1Config::with_defaults(int n, double omega, double gamma, double delta_h) {
  return make(omega, gamma, delta_h, -10.0 * Mat::Identity(n, n), Mat::Identity(n, n));
}

double L1Config::theta_max() const { return std::sqrt(1.0 + eps_proj) * delta_h; }

double L1Config::lyapunov_residual() const { return (A_m.transpose() * P + P * A_m + Q).norm(); }

L1State L1State::initial(const Vec& x0, int m) {
  L1State s;
  s.x_hat = x0;
  s.sigma_hat = Vec::Zero(m);
  s.u_a = Vec::Zero(m);
  s.x_tilde = Vec::Zero(x0.size());
  return s;
}

void predictor_step(const DynamicsModel& model, const L1Config& cfg, L1State& st, const StageStates& x_stages,
                    const Vec& x_next, const Vec& u_c, double dt) {
  const Vec u = u_c + st.u_a + st.sigma_hat;
  auto rhs = [&](int stage, const Vec& xh) {
    const Vec& x = x_stages[stage];
    return Vec(model.nominal_rate(x, u) + cfg.A_m * (xh - x));
  };
  const Vec k1 = rhs(0, st.x_hat);
  const Vec k2 = rhs(1, st.x_hat + 0.5 * dt * k1);
  const Vec k3 = rhs(2, st.x_hat + 0.5 * dt * k2);
  const Vec k4 = rhs(3, st.x_hat + dt * k3);
  st.x_hat = st.x_hat + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!st.x_hat.allFinite()) throw NumericFault("state predictor produced a non-finite value");
  st.x_tilde = st.x_hat - x_next;
}

void predictor_step(const DynamicsModel& model, const L1Config& cfg, L1State& st, const Vec& x, const Vec& u_c,
                    double dt) {
  predictor_step(model, cfg, st, StageStates{x, x, x, x}, x, u_c, dt);
}

Vec projection_op(const L1Config& cfg, const Vec& theta, const Vec& y) {
  const double tmax2 = cfg.theta_max() * cfg.theta_max();
  const double eps = cfg.eps_proj;
  const double f = ((1.0 + eps) * theta.squaredNorm() - tmax2) / (eps * tmax2);
  const Vec grad = (2.0 * (1.0 + eps) / (eps * tmax2)) * theta;
  const double gy = grad.dot(y);
  if (f > 0.0 && gy > 0.0) return y - grad * (gy * f / grad.squaredNorm());
  return y;
}

void adaptation_step(const DynamicsModel& model, const L1Config& cfg, L1State& st, const Vec& x, double dt) {
  const Vec y = -model.input_matrix(x).transpose() * (cfg.P * st.x_tilde);
  st.sigma_hat += dt * cfg.gamma * projection_op(cfg, st.sigma_hat, y);
  const double nrm = st.sigma_hat.norm();
  const double cap = cfg.theta_max();
  if (nrm > cap) {
    st.sigma_hat *= cap / nrm;
    ++st.clamp_events;
  }
  if (!st.sigma_hat.allFinite()) throw NumericFault("adaptation produced a non-finite estimate");
}

void filter_step(const L1Config& cfg, L1State& st, double dt) {
  const double decay = std::exp(-cfg.omega * dt);
  st.u_a = decay * st.u_a + (1.0 - decay) * (-st.sigma_hat);
}

}  // namespace safetube
