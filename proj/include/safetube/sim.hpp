#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "safetube/certification.hpp"
#include "safetube/geodesic.hpp"
#include "safetube/l1_control.hpp"
#include "safetube/models.hpp"

namespace safetube {

struct SimConfig {
  double dt = 1e-3;
  double horizon = 10.0;
  GeodesicOptions geodesic;
  std::uint64_t seed = 0;
  double divergence_threshold = 1e6;

  void validate() const;
  long steps() const;
};

/// Closed-loop run sampled at t_k = k dt, k = 0..steps. Inputs at index k are the ones
/// held over [t_k, t_{k+1}).
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> x_star;
  std::vector<Vec> u_c;
  std::vector<Vec> u_a;
  std::vector<Vec> u;
  std::vector<Vec> x_hat;
  std::vector<Vec> sigma_hat;
  std::vector<double> x_tilde_norm;
  std::vector<double> energy;
  int degraded_geodesics = 0;
  int feedback_faults = 0;

  std::size_t size() const { return t.size(); }
  double max_state_norm(double t_from = 0.0, double t_to = 1e300) const;
  double max_tracking_error(double t_from = 0.0, double t_to = 1e300) const;
  double max_x_tilde() const;
  double max_sigma_hat() const;
};

class SimulationDiverged : public std::runtime_error {
 public:
  SimulationDiverged(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Uncertain plant under u = u* + k_c + u_a.
Trajectory integrate_closed_loop(const DynamicsModel& model, const MetricField& field, const L1Config& l1,
                                 const DesiredTrajectory& traj, const Vec& x0, const SimConfig& cfg);

/// Non-implementable reference loop: the true uncertainty is filtered and cancelled.
Trajectory integrate_reference(const DynamicsModel& model, const MetricField& field, double omega,
                               const DesiredTrajectory& traj, const Vec& x0, const SimConfig& cfg);

/// CCM feedback alone on the nominal dynamics (h ignored).
Trajectory integrate_nominal_ccm(const DynamicsModel& model, const MetricField& field, const DesiredTrajectory& traj,
                                 const Vec& x0, const SimConfig& cfg);

/// CCM feedback alone on the uncertain plant.
Trajectory integrate_ccm_only(const DynamicsModel& model, const MetricField& field, const DesiredTrajectory& traj,
                              const Vec& x0, const SimConfig& cfg);

struct ContainmentReport {
  std::vector<double> t;
  std::vector<double> dist;
  std::vector<double> delta_t;
  double rho = 0.0;
  double max_dist = 0.0;
  std::optional<double> first_rho_violation;
  std::optional<double> first_delta_violation;
  std::optional<double> first_safe_set_violation;

  bool has_reference = false;
  std::vector<double> reference_dist;
  std::vector<double> mu_t;
  double rho_r = 0.0;
  double reference_max_dist = 0.0;
  std::optional<double> first_reference_violation;
  std::optional<double> first_mu_violation;
  /// sup |x_r - x| over the common grid.
  double reference_gap = 0.0;

  bool contained() const { return !first_rho_violation && !first_safe_set_violation; }
};

ContainmentReport containment(const Trajectory& traj, const TubeCertificate& cert, const SafeSet* safe_set = nullptr,
                              const Trajectory* reference = nullptr);

}  // namespace safetube
