#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "safetube/geodesic.hpp"
#include "safetube/l1_control.hpp"
#include "safetube/metric.hpp"
#include "safetube/models.hpp"

namespace safetube {

enum class Provenance { Sampled, User, ClosedForm };
const char* to_string(Provenance p);

struct DeltaEntry {
  double value = 0.0;
  Provenance source = Provenance::ClosedForm;
  int samples = 0;         ///< sampled entries only
  double inflation = 1.0;  ///< sampled entries only
};

struct DeltaSampling {
  int time_points = 200;      ///< trajectory instants covered
  int ball_points = 25;       ///< random tube points per instant (plus the center)
  double inflation = 1.1;
  std::uint64_t seed = 0;
};

/// L1 filter norms for C(s) = omega / (s + omega).
inline double filter_norm_C() { return 1.0; }
inline double filter_norm_I_minus_C() { return 2.0; }
inline double filter_norm_sC(double omega) { return 2.0 * omega; }

/// Assumption bounds resolved over the tube plus every derived constant.
struct DeltaConstants {
  // model and trajectory bounds
  DeltaEntry f, fx, B, Bx, bx, h, hx, ht, B_pinv, B_pinv_x, ustar;
  // metric and derived quantities
  DeltaEntry Mx, Psi_x, delta_u, xr_dot, x_dot, x_tilde, eta_tilde, theta, gamma_s_dot, Psi_dot;

  double rho = 0.0;      ///< tube radius the suprema were taken over
  double omega = 0.0;    ///< bandwidth eta_tilde and theta were evaluated at (0 = not yet)
  double lambda = 0.0;
  double alpha_lower = 0.0;
  double alpha_upper = 0.0;
  double eps_proj = 0.1;
  double A_m_norm = 0.0;

  /// Copy with the bandwidth-dependent constants (eta_tilde, theta) evaluated at omega.
  DeltaConstants with_bandwidth(double omega) const;

  std::vector<std::pair<std::string, const DeltaEntry*>> entries() const;
};

/// Estimates every constant over the tube of radius rho around traj. Entries present in
/// `bounds` are taken as given; the rest are sampled and inflated.
DeltaConstants estimate_deltas(const DynamicsModel& model, const MetricField& field, const AssumptionBounds& bounds,
                               double rho, const DesiredTrajectory& traj, const L1Config& l1,
                               const DeltaSampling& sampling = {});

struct Zeta {
  double z1 = 0.0;
  double z2 = 0.0;
  double z3 = 0.0;
};

/// Throws CertificateError when omega is within 1e-9 of the pole at 2 lambda.
Zeta zeta(double omega, const DeltaConstants& d, double rho);

struct TubeInputs {
  double omega = 0.0;
  double gamma = 0.0;
  double eps = 0.0;
  double rho_a = 0.0;
  Vec x0;
  Vec x0_star;
};

/// sqrt(alpha_upper/alpha_lower) |x0* - x0| + eps + rho_a
double candidate_rho(const MetricField& field, double eps, double rho_a, const Vec& x0, const Vec& x0_star);

struct TubeCertificate {
  double eps = 0.0;
  double rho_a = 0.0;
  double rho_r = 0.0;
  double rho = 0.0;
  double omega = 0.0;
  double gamma = 0.0;
  double energy0 = 0.0;
  double lambda = 0.0;
  double alpha_lower = 0.0;
  Zeta zeta;
  double margin_a = 0.0;  ///< rho_r^2 - E0/alpha_lower - zeta1
  double margin_b = 0.0;  ///< alpha_lower - zeta2 - zeta3
  double margin_c = 0.0;  ///< sqrt(Gamma) - Delta_theta / (rho_a margin_b)
  double gamma_required = 0.0;  ///< (Delta_theta / (rho_a margin_b))^2, infinite when margin_b <= 0
  double norm_C = 1.0;
  double norm_I_minus_C = 2.0;
  double norm_sC = 0.0;
  bool valid = false;
  /// First failing condition ("reference_tube", "bandwidth", "adaptation_rate") or empty.
  std::string binding;
  /// Tube radius the constants were estimated over differs from rho.
  bool rho_mismatch = false;
  DeltaConstants deltas;

  double mu(double T) const;
  double delta(double T) const;
};

TubeCertificate check_conditions(const TubeInputs& in, const DeltaConstants& d, const MetricField& field,
                                 const GeodesicOptions& geo = {});

struct SearchResult {
  bool feasible = false;
  double omega = 0.0;
  double gamma = 0.0;
  std::string binding;  ///< condition that failed at the largest omega tried when infeasible
  TubeCertificate certificate;
};

/// Smallest omega on a log grid over [omega_min, omega_max] meeting the bandwidth conditions with
/// relative margin, then the matching adaptation rate.
SearchResult search_params(const DeltaConstants& d, const MetricField& field, double eps, double rho_a,
                           const Vec& x0, const Vec& x0_star, double omega_min, double omega_max,
                           double margin = 0.1, int grid_points = 200);

struct UltimateBounds {
  double mu = 0.0;
  double delta = 0.0;
};

UltimateBounds ultimate_bounds(const TubeCertificate& cert, double T);

}  // namespace safetube
