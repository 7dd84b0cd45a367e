#include "safetube/models.hpp"

#include <algorithm>
#include <cmath>

#include "safetube/errors.hpp"

namespace safetube {

namespace {

void require_dim(const Vec& v, int expected, const char* what) {
  if (v.size() != expected) {
    throw ContractViolation(std::string(what) + " has dimension " + std::to_string(v.size()) +
                            ", expected " + std::to_string(expected));
  }
}

}  // namespace

Vec DynamicsModel::drift(const Vec& x) const {
  require_dim(x, n, "state");
  return f(x);
}

Mat DynamicsModel::input_matrix(const Vec& x) const {
  require_dim(x, n, "state");
  return B(x);
}

Mat DynamicsModel::drift_jacobian(const Vec& x) const {
  require_dim(x, n, "state");
  if (jac_f) return jac_f(x);
  return fd_jacobian(f, x);
}

std::vector<Mat> DynamicsModel::input_partials(const Vec& x) const {
  require_dim(x, n, "state");
  if (dB) return dB(x);
  return fd_partials(B, x);
}

Vec DynamicsModel::uncertainty(double t, const Vec& x) const {
  if (!h) return Vec::Zero(m);
  return h(t, x);
}

Vec DynamicsModel::nominal_rate(const Vec& x, const Vec& u) const {
  require_dim(x, n, "state");
  require_dim(u, m, "input");
  return f(x) + B(x) * u;
}

DynamicsModel DynamicsModel::nominal() const {
  DynamicsModel copy = *this;
  copy.h = nullptr;
  return copy;
}

Vec eval_dynamics(const DynamicsModel& model, double t, const Vec& x, const Vec& u) {
  if (t < 0.0) throw ContractViolation("eval_dynamics: negative time");
  require_dim(x, model.n, "state");
  require_dim(u, model.m, "input");
  Vec rate;
  if (model.has_uncertainty()) {
    const Vec hv = model.h(t, x);
    require_dim(hv, model.m, "uncertainty");
    rate = model.f(x) + model.B(x) * (u + hv);
  } else {
    rate = model.f(x) + model.B(x) * u;
  }
  if (!rate.allFinite()) throw NumericFault("eval_dynamics: non-finite state rate");
  return rate;
}

double input_rank_margin(const DynamicsModel& model, const Vec& x) {
  const Mat b = model.input_matrix(x);
  Eigen::JacobiSVD<Mat> svd(b);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

Mat input_pseudo_inverse(const Mat& b) {
  const Mat gram = b.transpose() * b;
  return gram.ldlt().solve(b.transpose());
}

std::vector<Mat> input_pseudo_inverse_partials(const Mat& b, const std::vector<Mat>& db) {
  // d(G^{-1} B^T) = -G^{-1} dG G^{-1} B^T + G^{-1} dB^T,  G = B^T B.
  const Mat gram = b.transpose() * b;
  const Mat gram_inv = gram.inverse();
  const Mat pinv = gram_inv * b.transpose();
  std::vector<Mat> out;
  out.reserve(db.size());
  for (const Mat& d : db) {
    const Mat dgram = d.transpose() * b + b.transpose() * d;
    out.push_back(-gram_inv * dgram * pinv + gram_inv * d.transpose());
  }
  return out;
}

void AssumptionBounds::validate(bool model_has_uncertainty) const {
  const std::pair<const char*, const std::optional<double>*> entries[] = {
      {"delta_f", &delta_f},         {"delta_fx", &delta_fx},
      {"delta_B", &delta_B},         {"delta_Bx", &delta_Bx},
      {"delta_bx", &delta_bx},       {"delta_h", &delta_h},
      {"delta_hx", &delta_hx},       {"delta_ht", &delta_ht},
      {"delta_B_pinv", &delta_B_pinv}, {"delta_B_pinv_x", &delta_B_pinv_x},
      {"delta_ustar", &delta_ustar},
  };
  for (const auto& [name, value] : entries) {
    if (value->has_value() && !(**value >= 0.0)) {
      throw ContractViolation(std::string("assumption bound ") + name + " must be nonnegative");
    }
  }
  if (model_has_uncertainty && delta_h.has_value() && !(*delta_h > 0.0)) {
    throw ContractViolation("delta_h must be positive when the model has an uncertainty");
  }
}

SafeSet SafeSet::box(Vec center, Vec half_widths) {
  if (center.size() != half_widths.size()) throw ContractViolation("box center/half-width mismatch");
  if ((half_widths.array() < 0.0).any()) throw ContractViolation("box half-widths must be nonnegative");
  SafeSet s;
  s.kind_ = Kind::Box;
  s.center_ = std::move(center);
  s.half_widths_ = std::move(half_widths);
  return s;
}

SafeSet SafeSet::ball(Vec center, double radius) {
  if (!(radius >= 0.0)) throw ContractViolation("ball radius must be nonnegative");
  SafeSet s;
  s.kind_ = Kind::Ball;
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

SafeSet SafeSet::linf_ball(int n, double r) { return box(Vec::Zero(n), Vec::Constant(n, r)); }

bool SafeSet::contains(const Vec& x) const {
  require_dim(x, dim(), "point");
  if (kind_ == Kind::Box) return ((x - center_).cwiseAbs().array() <= half_widths_.array()).all();
  return (x - center_).norm() <= radius_;
}

SafeSet SafeSet::eroded(double rho) const {
  if (rho < 0.0) throw ContractViolation("erosion radius must be nonnegative");
  if (kind_ == Kind::Box) {
    const Vec hw = half_widths_.array() - rho;
    if ((hw.array() < 0.0).any()) throw ContractViolation("eroded box is empty");
    return box(center_, hw);
  }
  if (radius_ < rho) throw ContractViolation("eroded ball is empty");
  return ball(center_, radius_ - rho);
}

DesiredTrajectory::DesiredTrajectory(double dt, std::vector<Vec> states, std::vector<Vec> inputs)
    : dt_(dt), states_(std::move(states)), inputs_(std::move(inputs)) {
  if (!(dt_ > 0.0)) throw ContractViolation("trajectory step must be positive");
  if (states_.empty()) throw ContractViolation("trajectory needs at least one state");
  if (inputs_.size() != states_.size()) {
    throw ContractViolation("trajectory needs one input per state sample");
  }
}

DesiredTrajectory DesiredTrajectory::constant(const Vec& x, const Vec& u, double dt, double horizon) {
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  return DesiredTrajectory(dt, std::vector<Vec>(steps + 1, x), std::vector<Vec>(steps + 1, u));
}

Vec DesiredTrajectory::state_at(double t) const {
  if (t <= 0.0) return states_.front();
  const double pos = t / dt_;
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= states_.size()) return states_.back();
  const double frac = pos - static_cast<double>(i);
  if (frac < 1e-9) return states_[i];
  if (frac > 1.0 - 1e-9) return states_[i + 1];
  return (1.0 - frac) * states_[i] + frac * states_[i + 1];
}

Vec DesiredTrajectory::input_at(double t) const {
  if (t <= 0.0) return inputs_.front();
  // Snap to the grid so that t = k dt selects interval k despite rounding.
  const double pos = t / dt_ + 1e-9;
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i >= inputs_.size()) return inputs_.back();
  return inputs_[i];
}

double DesiredTrajectory::max_input_norm() const {
  double best = 0.0;
  for (const Vec& u : inputs_) best = std::max(best, u.norm());
  return best;
}

double DesiredTrajectory::consistency_residual(const DynamicsModel& model) const {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < states_.size(); ++i) {
    const Vec fd = (states_[i + 1] - states_[i]) / dt_;
    const Vec mid = 0.5 * (states_[i] + states_[i + 1]);
    worst = std::max(worst, (fd - model.nominal_rate(mid, inputs_[i])).norm());
  }
  return worst;
}

DesiredTrajectory DesiredTrajectory::refined(const DynamicsModel& model, double dt) const {
  const double ratio = dt_ / dt;
  const auto sub = static_cast<long>(std::llround(ratio));
  if (sub < 1 || std::abs(ratio - static_cast<double>(sub)) > 1e-6 * ratio) {
    throw ContractViolation("refined(): new step must divide the trajectory step");
  }
  if (sub == 1) return *this;
  std::vector<Vec> xs;
  std::vector<Vec> us;
  xs.reserve((states_.size() - 1) * sub + 1);
  us.reserve(xs.capacity());
  Vec x = states_.front();
  for (std::size_t i = 0; i + 1 < states_.size(); ++i) {
    const Vec& u = inputs_[i];
    auto rhs = [&](double, const Vec& s) { return model.nominal_rate(s, u); };
    for (long k = 0; k < sub; ++k) {
      xs.push_back(x);
      us.push_back(u);
      x = rk4_step(rhs, 0.0, x, dt);
    }
  }
  xs.push_back(x);
  us.push_back(inputs_.back());
  return DesiredTrajectory(dt, std::move(xs), std::move(us));
}

Vec rk4_step(const std::function<Vec(double, const Vec&)>& rhs, double t, const Vec& x, double dt) {
  const Vec k1 = rhs(t, x);
  const Vec k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1);
  const Vec k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2);
  const Vec k4 = rhs(t + dt, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace safetube
