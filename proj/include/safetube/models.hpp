#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <cmath>
#include <string>
#include <vector>

#include "safetube/types.hpp"

namespace safetube {

/// Control-affine system  x' = f(x) + B(x) (u + h(t, x)).
///
/// `jac_f` and `dB` are optional closed-form derivatives; when empty, central
/// differences with step 1e-6 (1 + |x|) are used. An empty `h` means the model
/// is nominal.
struct DynamicsModel {
  using VecFn = std::function<Vec(const Vec&)>;
  using MatFn = std::function<Mat(const Vec&)>;
  using PartialsFn = std::function<std::vector<Mat>(const Vec&)>;
  using UncertaintyFn = std::function<Vec(double, const Vec&)>;

  std::string name;
  int n = 0;
  int m = 0;
  VecFn f;
  MatFn B;
  MatFn jac_f;
  PartialsFn dB;
  UncertaintyFn h;

  bool has_uncertainty() const { return static_cast<bool>(h); }

  Vec drift(const Vec& x) const;
  Mat input_matrix(const Vec& x) const;
  Mat drift_jacobian(const Vec& x) const;
  /// dB/dx_i for i = 0..n-1, each n x m.
  std::vector<Mat> input_partials(const Vec& x) const;
  /// h(t, x), or the zero vector for nominal models.
  Vec uncertainty(double t, const Vec& x) const;

  /// f(x) + B(x) u
  Vec nominal_rate(const Vec& x, const Vec& u) const;

  /// Copy of this model with the uncertainty removed.
  DynamicsModel nominal() const;
};

/// f(x) + B(x)(u + h(t, x)); nominal rate when h is absent.
Vec eval_dynamics(const DynamicsModel& model, double t, const Vec& x, const Vec& u);

/// Smallest singular value of B(x).
double input_rank_margin(const DynamicsModel& model, const Vec& x);

/// Moore-Penrose inverse (B^T B)^{-1} B^T and its partials along each coordinate.
Mat input_pseudo_inverse(const Mat& b);
std::vector<Mat> input_pseudo_inverse_partials(const Mat& b, const std::vector<Mat>& db);

/// Known bounds on the system functions over the tube. Absent entries are
/// estimated by sampling during certification.
struct AssumptionBounds {
  std::optional<double> delta_f;
  std::optional<double> delta_fx;
  std::optional<double> delta_B;
  std::optional<double> delta_Bx;
  std::optional<double> delta_bx;
  std::optional<double> delta_h;
  std::optional<double> delta_hx;
  std::optional<double> delta_ht;
  std::optional<double> delta_B_pinv;
  std::optional<double> delta_B_pinv_x;
  std::optional<double> delta_ustar;

  /// Throws ContractViolation on negative entries, or on delta_h <= 0 for an uncertain model.
  void validate(bool model_has_uncertainty) const;
};

/// Axis-aligned box or Euclidean ball.
class SafeSet {
 public:
  enum class Kind { Box, Ball };

  static SafeSet box(Vec center, Vec half_widths);
  static SafeSet ball(Vec center, double radius);
  /// Box centered at the origin with equal half-widths: { |y|_inf <= r }.
  static SafeSet linf_ball(int n, double r);

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(center_.size()); }
  const Vec& center() const { return center_; }
  const Vec& half_widths() const { return half_widths_; }
  double radius() const { return radius_; }

  bool contains(const Vec& x) const;
  /// Pontryagin difference X (-) B(rho). Throws ContractViolation if the result is empty.
  SafeSet eroded(double rho) const;
  /// Uniform sample of the set.
  template <class Rng>
  Vec sample(Rng& rng) const;

 private:
  Kind kind_ = Kind::Box;
  Vec center_;
  Vec half_widths_;
  double radius_ = 0.0;
};

/// Desired state-input pair on a uniform grid. States are interpolated
/// linearly; inputs are held over each interval (zero-order hold).
class DesiredTrajectory {
 public:
  DesiredTrajectory() = default;
  DesiredTrajectory(double dt, std::vector<Vec> states, std::vector<Vec> inputs);

  /// x* = x, u* = u for all t in [0, horizon].
  static DesiredTrajectory constant(const Vec& x, const Vec& u, double dt, double horizon);

  double dt() const { return dt_; }
  double horizon() const { return dt_ * static_cast<double>(states_.size() - 1); }
  std::size_t size() const { return states_.size(); }
  const std::vector<Vec>& states() const { return states_; }
  const std::vector<Vec>& inputs() const { return inputs_; }

  Vec state_at(double t) const;
  Vec input_at(double t) const;
  double max_input_norm() const;

  /// max_i | (x_{i+1} - x_i)/dt - F(midpoint, u_i) |  (second-order in dt for consistent plans).
  double consistency_residual(const DynamicsModel& model) const;

  /// Re-integrates the nominal dynamics under the held inputs on a finer grid.
  /// `dt` must divide the current step.
  DesiredTrajectory refined(const DynamicsModel& model, double dt) const;

 private:
  double dt_ = 0.0;
  std::vector<Vec> states_;
  std::vector<Vec> inputs_;
};

/// Classic fourth-order Runge-Kutta step for x' = rhs(t, x).
Vec rk4_step(const std::function<Vec(double, const Vec&)>& rhs, double t, const Vec& x, double dt);

// ---------------------------------------------------------------------------

template <class Rng>
Vec SafeSet::sample(Rng& rng) const {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int n = dim();
  Vec out(n);
  if (kind_ == Kind::Box) {
    for (int i = 0; i < n; ++i) out(i) = center_(i) + half_widths_(i) * uni(rng);
    return out;
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec dir(n);
  for (int i = 0; i < n; ++i) dir(i) = gauss(rng);
  const double nrm = dir.norm();
  if (nrm == 0.0) return center_;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = radius_ * std::pow(unit(rng), 1.0 / n);
  return center_ + (r / nrm) * dir;
}

}  // namespace safetube
