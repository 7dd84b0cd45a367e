#include "safetube/planner.hpp"

#include <cmath>
#include <limits>

#include "safetube/errors.hpp"

namespace safetube {

namespace {

struct Rollout {
  std::vector<Vec> x;
  std::vector<Vec> u;
  double cost = 0.0;
};

}  // namespace

DesiredTrajectory ilqr_plan(const DynamicsModel& model_in, const IlqrCost& c, const Vec& x0, const Vec& target,
                            double horizon, double dt, const IlqrOptions& opt, IlqrStats* stats) {
  const DynamicsModel model = model_in.nominal();
  const int n = model.n;
  const int m = model.m;
  if (x0.size() != n || target.size() != n) throw ContractViolation("ilqr_plan: state dimension mismatch");
  if (c.Q.rows() != n || c.Qf.rows() != n || c.R.rows() != m) throw ContractViolation("ilqr_plan: cost shape mismatch");
  if (!(dt > 0.0) || !(horizon >= dt) || !std::isfinite(horizon)) throw ContractViolation("ilqr_plan: bad horizon");
  const long N = std::lround(horizon / dt);

  auto step = [&](const Vec& x, const Vec& u) {
    return rk4_step([&](double, const Vec& s) { return model.nominal_rate(s, u); }, 0.0, x, dt);
  };
  auto total_cost = [&](const std::vector<Vec>& xs, const std::vector<Vec>& us) {
    double j = 0.0;
    for (long k = 0; k < N; ++k) {
      const Vec e = xs[k] - target;
      j += 0.5 * dt * (e.dot(c.Q * e) + us[k].dot(c.R * us[k]));
    }
    const Vec e = xs[N] - target;
    return j + 0.5 * e.dot(c.Qf * e);
  };
  auto rollout = [&](const std::vector<Vec>& us) {
    Rollout r;
    r.u = us;
    r.x.resize(N + 1);
    r.x[0] = x0;
    for (long k = 0; k < N; ++k) {
      r.x[k + 1] = step(r.x[k], us[k]);
      if (!r.x[k + 1].allFinite()) {
        r.cost = std::numeric_limits<double>::infinity();
        return r;
      }
    }
    r.cost = total_cost(r.x, r.u);
    return r;
  };

  Rollout cur = rollout(std::vector<Vec>(N, Vec::Zero(m)));
  if (!std::isfinite(cur.cost)) throw PlannerFailure("initial rollout diverged");

  double mu = opt.reg_init;
  std::vector<Mat> A(N), B(N), K(N);
  std::vector<Vec> kff(N);
  int it = 0;
  bool converged = false;
  while (it < opt.max_iterations) {
    ++it;
    for (long k = 0; k < N; ++k) {
      const Vec& xk = cur.x[k];
      const Vec& uk = cur.u[k];
      A[k] = fd_jacobian([&](const Vec& x) { return step(x, uk); }, xk);
      B[k] = fd_jacobian([&](const Vec& u) { return step(xk, u); }, uk);
    }

    bool backward_ok = false;
    double expected = 0.0;
    while (!backward_ok) {
      Vec vx = c.Qf * (cur.x[N] - target);
      Mat vxx = c.Qf;
      backward_ok = true;
      expected = 0.0;
      for (long k = N - 1; k >= 0; --k) {
        const Vec e = cur.x[k] - target;
        const Vec qx = dt * c.Q * e + A[k].transpose() * vx;
        const Vec qu = dt * c.R * cur.u[k] + B[k].transpose() * vx;
        const Mat qxx = dt * c.Q + A[k].transpose() * vxx * A[k];
        const Mat quu = sym(dt * c.R + B[k].transpose() * vxx * B[k]) + mu * Mat::Identity(m, m);
        const Mat qux = B[k].transpose() * vxx * A[k];
        Eigen::LLT<Mat> llt(quu);
        if (llt.info() != Eigen::Success) {
          backward_ok = false;
          break;
        }
        K[k] = -llt.solve(qux);
        kff[k] = -llt.solve(qu);
        expected += kff[k].dot(qu);
        vx = qx + K[k].transpose() * quu * kff[k] + K[k].transpose() * qu + qux.transpose() * kff[k];
        vxx = sym(qxx + K[k].transpose() * quu * K[k] + K[k].transpose() * qux + qux.transpose() * K[k]);
      }
      if (!backward_ok) {
        mu = std::max(mu * 10.0, 1e-8);
        if (mu > opt.reg_max) throw PlannerFailure("iLQR backward pass failed at maximum regularization");
      }
    }

    bool accepted = false;
    for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
      std::vector<Vec> us(N);
      Rollout trial;
      trial.x.resize(N + 1);
      trial.x[0] = x0;
      bool finite = true;
      for (long k = 0; k < N && finite; ++k) {
        us[k] = cur.u[k] + alpha * kff[k] + K[k] * (trial.x[k] - cur.x[k]);
        trial.x[k + 1] = step(trial.x[k], us[k]);
        finite = trial.x[k + 1].allFinite();
      }
      if (!finite) continue;
      trial.u = std::move(us);
      trial.cost = total_cost(trial.x, trial.u);
      if (trial.cost < cur.cost) {
        const double decrease = cur.cost - trial.cost;
        cur = std::move(trial);
        accepted = true;
        mu = std::max(mu * 0.1, 1e-12);
        if (decrease < opt.tolerance) converged = true;
        break;
      }
    }
    if (converged) break;
    if (!accepted) {
      // No descent direction left: a stationary point when the predicted decrease is negligible.
      if (std::abs(expected) < opt.tolerance) {
        converged = true;
        break;
      }
      mu *= 10.0;
      if (mu > opt.reg_max) throw PlannerFailure("iLQR found no cost decrease at maximum regularization");
    }
  }

  if (stats) {
    stats->iterations = it;
    stats->cost = cur.cost;
    stats->converged = converged;
  }
  std::vector<Vec> inputs = cur.u;
  inputs.push_back(N > 0 ? cur.u.back() : Vec::Zero(m));
  return DesiredTrajectory(dt, cur.x, inputs);
}

}  // namespace safetube
