#include "safetube/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "safetube/errors.hpp"

namespace safetube {

CertifyOutcome certify_scenario(const ResolvedScenario& r, double eps, double rho_a, std::optional<double> omega,
                                std::optional<double> gamma, const L1Spec& spec, const DeltaSampling& sampling) {
  const Vec x0_star = r.desired.states().front();
  const double rho = candidate_rho(r.metric, eps, rho_a, r.x0, x0_star);
  L1Config base = r.l1_base;
  if (omega) base.omega = *omega;

  CertifyOutcome out;
  out.deltas = estimate_deltas(r.model, r.metric, r.bounds, rho, r.desired, base, sampling);

  double w = 0.0;
  double g = 0.0;
  if (!omega) {
    SearchResult sr = search_params(out.deltas, r.metric, eps, rho_a, r.x0, x0_star, spec.omega_min, spec.omega_max,
                                    spec.search_margin);
    out.search = sr;
    if (sr.feasible) {
      w = sr.omega;
      g = sr.gamma;
    } else {
      w = spec.omega_max;
      g = 1.0;
    }
  } else {
    w = *omega;
    if (gamma) {
      g = *gamma;
    } else {
      const TubeCertificate probe = check_conditions(TubeInputs{w, 1.0, eps, rho_a, r.x0, x0_star}, out.deltas,
                                                     r.metric, r.sim.geodesic);
      const double m = 1.0 + spec.search_margin;
      g = std::isfinite(probe.gamma_required) ? std::max(1.0, m * m * probe.gamma_required) : 1.0;
    }
  }
  out.certificate = check_conditions(TubeInputs{w, g, eps, rho_a, r.x0, x0_star}, out.deltas, r.metric,
                                     r.sim.geodesic);
  out.deltas = out.certificate.deltas;
  const double delta_h = out.deltas.h.value > 0.0 ? out.deltas.h.value : 1.0;
  out.l1 = L1Config::make(w, g, delta_h, base.A_m, base.Q, base.eps_proj);
  return out;
}

std::vector<SweepRow> run_sweep(const ResolvedScenario& r, const std::vector<SweepPoint>& points,
                                const DeltaSampling& sampling, int threads, bool simulate) {
  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      SweepRow& row = rows[i];
      row.point = points[i];
      try {
        L1Spec spec;
        const CertifyOutcome c = certify_scenario(r, row.point.eps, row.point.rho_a, row.point.omega,
                                                  row.point.gamma, spec, sampling);
        const TubeCertificate& cert = c.certificate;
        row.certified = cert.valid;
        row.binding = cert.binding;
        row.margin_a = cert.margin_a;
        row.margin_b = cert.margin_b;
        row.margin_c = cert.margin_c;
        row.gamma_required = cert.gamma_required;
        row.rho = cert.rho;
        row.rho_r = cert.rho_r;
        if (simulate) {
          const Trajectory tr = integrate_closed_loop(r.model, r.metric, c.l1, r.desired, r.x0, r.sim);
          row.sup_error = tr.max_tracking_error();
          row.sup_x_tilde = tr.max_x_tilde();
          const Trajectory ref = integrate_reference(r.model, r.metric, row.point.omega, r.desired, r.x0, r.sim);
          row.sup_reference_error = ref.max_tracking_error();
        }
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < workers; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

}  // namespace safetube
