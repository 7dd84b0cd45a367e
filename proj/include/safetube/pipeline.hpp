#pragma once

#include <optional>
#include <string>
#include <vector>

#include "safetube/certification.hpp"
#include "safetube/scenario.hpp"
#include "safetube/sim.hpp"

namespace safetube {

struct CertifyOutcome {
  DeltaConstants deltas;
  TubeCertificate certificate;
  /// Set when omega was "auto".
  std::optional<SearchResult> search;
  /// Controller configuration matching the certificate (delta_h = resolved Delta_h).
  L1Config l1;
  bool feasible() const { return certificate.valid; }
};

/// Estimates the constants over the candidate tube, then checks the conditions at the requested
/// (omega, Gamma) or searches for them. Gamma "auto" with a fixed omega uses the required rate
/// times (1 + margin)^2.
CertifyOutcome certify_scenario(const ResolvedScenario& r, double eps, double rho_a, std::optional<double> omega,
                                std::optional<double> gamma, const L1Spec& spec, const DeltaSampling& sampling);

struct SweepPoint {
  double omega = 0.0;
  double gamma = 0.0;
  double eps = 0.0;
  double rho_a = 0.0;
};

struct SweepRow {
  SweepPoint point;
  bool certified = false;
  std::string binding;
  double margin_a = 0.0;
  double margin_b = 0.0;
  double margin_c = 0.0;
  double gamma_required = 0.0;
  double rho = 0.0;
  double rho_r = 0.0;
  double sup_error = 0.0;
  double sup_x_tilde = 0.0;
  double sup_reference_error = 0.0;
  std::string error;
};

/// Certifies and simulates every point on `threads` workers; rows come back in input order.
std::vector<SweepRow> run_sweep(const ResolvedScenario& r, const std::vector<SweepPoint>& points,
                                const DeltaSampling& sampling, int threads, bool simulate = true);

}  // namespace safetube
