#include "safetube/sim.hpp"

#include <cmath>

#include "safetube/ccm_control.hpp"
#include "safetube/errors.hpp"

namespace safetube {

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ContractViolation("simulation step must be positive");
  if (!(horizon >= dt)) throw ContractViolation("simulation horizon must be at least one step");
}

long SimConfig::steps() const { return std::lround(horizon / dt); }

double Trajectory::max_state_norm(double t_from, double t_to) const {
  double best = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t[k] >= t_from - 1e-12 && t[k] <= t_to + 1e-12) best = std::max(best, x[k].norm());
  return best;
}

double Trajectory::max_tracking_error(double t_from, double t_to) const {
  double best = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t[k] >= t_from - 1e-12 && t[k] <= t_to + 1e-12) best = std::max(best, (x[k] - x_star[k]).norm());
  return best;
}

double Trajectory::max_x_tilde() const {
  double best = 0.0;
  for (double v : x_tilde_norm) best = std::max(best, v);
  return best;
}

double Trajectory::max_sigma_hat() const {
  double best = 0.0;
  for (const Vec& s : sigma_hat) best = std::max(best, s.norm());
  return best;
}

namespace {

enum class Mode { L1, Reference, Nominal, CcmOnly };

struct Stepped {
  Vec x_next;
  StageStates stages;
};

Stepped plant_step(const DynamicsModel& model, double t, const Vec& x, const Vec& u, double dt) {
  Stepped s;
  s.stages[0] = x;
  const Vec k1 = eval_dynamics(model, t, x, u);
  s.stages[1] = x + 0.5 * dt * k1;
  const Vec k2 = eval_dynamics(model, t + 0.5 * dt, s.stages[1], u);
  s.stages[2] = x + 0.5 * dt * k2;
  const Vec k3 = eval_dynamics(model, t + 0.5 * dt, s.stages[2], u);
  s.stages[3] = x + dt * k3;
  const Vec k4 = eval_dynamics(model, t + dt, s.stages[3], u);
  s.x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return s;
}

Trajectory run(Mode mode, const DynamicsModel& model_in, const MetricField& field, const L1Config* l1, double omega,
               const DesiredTrajectory& traj, const Vec& x0, const SimConfig& cfg) {
  cfg.validate();
  if (x0.size() != model_in.n || !x0.allFinite()) throw ContractViolation("initial state must be finite with size n");
  if (traj.size() == 0) throw ContractViolation("desired trajectory is empty");
  const DynamicsModel model = mode == Mode::Nominal ? model_in.nominal() : model_in;
  const int m = model.m;
  const long steps = cfg.steps();
  const double dt = cfg.dt;

  GeodesicSolver solver(field, cfg.geodesic);
  std::optional<GeodesicCurve> warm;
  L1State st = L1State::initial(x0, m);
  Vec eta_r = Vec::Zero(m);
  const double decay = std::exp(-omega * dt);

  Trajectory out;
  out.t.reserve(steps + 1);
  Vec x = x0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Vec xs = traj.state_at(t);
    const Vec us = traj.input_at(t);

    GeodesicCurve geo = solver.solve(xs, x, warm ? &*warm : nullptr);
    if (geo.degraded) ++out.degraded_geodesics;
    const CcmFeedbackResult fb = feedback_gain(model, field, xs, us, x, geo);
    if (fb.infeasible) ++out.feedback_faults;
    warm = std::move(geo);

    const Vec u_c = us + fb.k_c;
    Vec u_a = Vec::Zero(m);
    if (mode == Mode::L1) u_a = st.u_a;
    if (mode == Mode::Reference) u_a = -eta_r;
    const Vec u = u_c + u_a;

    out.t.push_back(t);
    out.x.push_back(x);
    out.x_star.push_back(xs);
    out.u_c.push_back(u_c);
    out.u_a.push_back(u_a);
    out.u.push_back(u);
    out.x_hat.push_back(mode == Mode::L1 ? st.x_hat : x);
    out.sigma_hat.push_back(mode == Mode::L1 ? st.sigma_hat : Vec::Zero(m));
    out.x_tilde_norm.push_back(mode == Mode::L1 ? st.x_tilde.norm() : 0.0);
    out.energy.push_back(fb.energy);
    if (k == steps) break;

    const Stepped s = plant_step(model, t, x, u, dt);
    if (!s.x_next.allFinite() || s.x_next.norm() > cfg.divergence_threshold) {
      throw SimulationDiverged("plant state diverged at t = " + std::to_string(t + dt), std::move(out));
    }
    if (mode == Mode::L1) {
      predictor_step(model, *l1, st, s.stages, s.x_next, u_c, dt);
      filter_step(*l1, st, dt);
      adaptation_step(model, *l1, st, s.x_next, dt);
    } else if (mode == Mode::Reference) {
      eta_r = decay * eta_r + (1.0 - decay) * model.uncertainty(t, x);
    }
    x = s.x_next;
  }
  return out;
}

}  // namespace

Trajectory integrate_closed_loop(const DynamicsModel& model, const MetricField& field, const L1Config& l1,
                                 const DesiredTrajectory& traj, const Vec& x0, const SimConfig& cfg) {
  return run(Mode::L1, model, field, &l1, l1.omega, traj, x0, cfg);
}

Trajectory integrate_reference(const DynamicsModel& model, const MetricField& field, double omega,
                               const DesiredTrajectory& traj, const Vec& x0, const SimConfig& cfg) {
  if (!(omega > 0.0)) throw ContractViolation("bandwidth must be positive");
  return run(Mode::Reference, model, field, nullptr, omega, traj, x0, cfg);
}

Trajectory integrate_nominal_ccm(const DynamicsModel& model, const MetricField& field, const DesiredTrajectory& traj,
                                 const Vec& x0, const SimConfig& cfg) {
  return run(Mode::Nominal, model, field, nullptr, 1.0, traj, x0, cfg);
}

Trajectory integrate_ccm_only(const DynamicsModel& model, const MetricField& field, const DesiredTrajectory& traj,
                              const Vec& x0, const SimConfig& cfg) {
  return run(Mode::CcmOnly, model, field, nullptr, 1.0, traj, x0, cfg);
}

ContainmentReport containment(const Trajectory& traj, const TubeCertificate& cert, const SafeSet* safe_set,
                              const Trajectory* reference) {
  ContainmentReport r;
  r.rho = cert.rho;
  r.rho_r = cert.rho_r;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.t[k];
    const double d = (traj.x[k] - traj.x_star[k]).norm();
    const double bound = cert.delta(t);
    r.t.push_back(t);
    r.dist.push_back(d);
    r.delta_t.push_back(bound);
    r.max_dist = std::max(r.max_dist, d);
    if (d > r.rho && !r.first_rho_violation) r.first_rho_violation = t;
    if (d > bound && !r.first_delta_violation) r.first_delta_violation = t;
    if (safe_set && !safe_set->contains(traj.x[k]) && !r.first_safe_set_violation) r.first_safe_set_violation = t;
  }
  if (reference) {
    if (reference->size() != traj.size()) throw ContractViolation("reference and closed-loop grids differ");
    r.has_reference = true;
    for (std::size_t k = 0; k < reference->size(); ++k) {
      const double t = reference->t[k];
      const double d = (reference->x[k] - reference->x_star[k]).norm();
      const double bound = cert.mu(t);
      r.reference_dist.push_back(d);
      r.mu_t.push_back(bound);
      r.reference_max_dist = std::max(r.reference_max_dist, d);
      r.reference_gap = std::max(r.reference_gap, (reference->x[k] - traj.x[k]).norm());
      if (d > r.rho_r && !r.first_reference_violation) r.first_reference_violation = t;
      if (d > bound && !r.first_mu_violation) r.first_mu_violation = t;
    }
  }
  return r;
}

}  // namespace safetube
