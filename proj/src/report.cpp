#include "safetube/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>

#include "safetube/errors.hpp"

namespace safetube {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json opt_time(const std::optional<double>& t) { return t ? json(*t) : json(nullptr); }

}  // namespace

json certificate_json(const TubeCertificate& c, const std::string& scenario_name) {
  json deltas = json::object();
  for (const auto& [name, e] : c.deltas.entries()) {
    json je = {{"value", finite_or_null(e->value)}, {"provenance", to_string(e->source)}};
    if (e->source == Provenance::Sampled) {
      je["samples"] = e->samples;
      je["inflation"] = e->inflation;
    }
    deltas[name] = je;
  }
  return json{
      {"scenario", scenario_name},
      {"valid", c.valid},
      {"binding_condition", c.binding.empty() ? json(nullptr) : json(c.binding)},
      {"omega", c.omega},
      {"gamma", c.gamma},
      {"gamma_required", finite_or_null(c.gamma_required)},
      {"eps", c.eps},
      {"rho_a", c.rho_a},
      {"rho_r", c.rho_r},
      {"rho", c.rho},
      {"rho_estimation", c.deltas.rho},
      {"rho_mismatch", c.rho_mismatch},
      {"energy0", c.energy0},
      {"lambda", c.lambda},
      {"alpha_lower", c.alpha_lower},
      {"alpha_upper", c.deltas.alpha_upper},
      {"zeta", {{"zeta1", c.zeta.z1}, {"zeta2", c.zeta.z2}, {"zeta3", c.zeta.z3}}},
      {"margins", {{"reference_tube", c.margin_a}, {"bandwidth", c.margin_b}, {"adaptation_rate", finite_or_null(c.margin_c)}}},
      {"filter_norms", {{"C", c.norm_C}, {"I_minus_C", c.norm_I_minus_C}, {"sC", c.norm_sC}}},
      {"ultimate_bound_floor", std::sqrt(c.zeta.z1)},
      {"deltas", deltas},
      {"notes",
       "Suprema over the tube are sampled and inflated; the tube radius is fixed from eps and rho_a before "
       "estimation. The projection set uses the inflated radius."},
  };
}

json containment_json(const ContainmentReport& r) {
  json j = {{"rho", r.rho},
            {"max_dist", r.max_dist},
            {"contained", r.contained()},
            {"first_rho_violation", opt_time(r.first_rho_violation)},
            {"first_delta_violation", opt_time(r.first_delta_violation)},
            {"first_safe_set_violation", opt_time(r.first_safe_set_violation)},
            {"samples", r.t.size()}};
  if (r.has_reference) {
    j["reference"] = {{"rho_r", r.rho_r},
                      {"max_dist", r.reference_max_dist},
                      {"first_rho_r_violation", opt_time(r.first_reference_violation)},
                      {"first_mu_violation", opt_time(r.first_mu_violation)},
                      {"max_gap_to_closed_loop", r.reference_gap}};
  }
  return j;
}

json ccm_report_json(const CcmCheckReport& r) {
  json viol = json::array();
  for (const Vec& x : r.violations) viol.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  return json{{"pass", r.pass},
              {"samples", r.samples},
              {"tolerance", r.tolerance},
              {"eigen", {{"ok", r.eigen_ok}, {"min", r.eig_min}, {"max", r.eig_max}, {"margin", r.eigen_margin}}},
              {"contraction", {{"ok", r.contraction_ok}, {"max_eigenvalue", r.contraction_max_eig}}},
              {"killing", {{"ok", r.killing_ok}, {"residual", r.killing_residual}}},
              {"violations", viol}};
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr, const TubeCertificate* cert) {
  std::ofstream out = open_out(path);
  if (tr.size() == 0) return;
  const auto n = tr.x.front().size();
  const auto m = tr.u_c.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i;
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_star_" << i;
  for (Eigen::Index j = 0; j < m; ++j) out << ",u_c_" << j;
  for (Eigen::Index j = 0; j < m; ++j) out << ",u_a_" << j;
  for (Eigen::Index j = 0; j < m; ++j) out << ",sigma_hat_" << j;
  out << ",xtilde_norm,energy,dist,rho,delta_t\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    out << tr.t[k];
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << tr.x[k](i);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << tr.x_star[k](i);
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << tr.u_c[k](j);
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << tr.u_a[k](j);
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << tr.sigma_hat[k](j);
    out << ',' << tr.x_tilde_norm[k] << ',' << tr.energy[k] << ',' << (tr.x[k] - tr.x_star[k]).norm();
    if (cert) {
      out << ',' << cert->rho << ',' << cert->delta(tr.t[k]);
    } else {
      out << ",,";
    }
    out << '\n';
  }
}

void write_plot_data_csv(const std::string& path, const Trajectory& l1, const Trajectory* ccm_only,
                         const Trajectory* reference, const TubeCertificate& cert) {
  std::ofstream out = open_out(path);
  out << "t,dist_l1,dist_ccm_only,dist_reference,rho,rho_r,delta_t,mu_t\n";
  for (std::size_t k = 0; k < l1.size(); ++k) {
    out << l1.t[k] << ',' << (l1.x[k] - l1.x_star[k]).norm() << ',';
    if (ccm_only && k < ccm_only->size()) out << (ccm_only->x[k] - ccm_only->x_star[k]).norm();
    out << ',';
    if (reference && k < reference->size()) out << (reference->x[k] - reference->x_star[k]).norm();
    out << ',' << cert.rho << ',' << cert.rho_r << ',' << cert.delta(l1.t[k]) << ',' << cert.mu(l1.t[k]) << '\n';
  }
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream out = open_out(path);
  out << "omega,gamma,eps,rho_a,certified,binding,margin_reference_tube,margin_bandwidth,margin_adaptation_rate,gamma_required,rho,rho_r,"
         "sup_error,sup_xtilde,sup_reference_error,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    out << r.point.omega << ',' << r.point.gamma << ',' << r.point.eps << ',' << r.point.rho_a << ','
        << (r.certified ? 1 : 0) << ',' << r.binding << ',' << r.margin_a << ',' << r.margin_b << ',' << r.margin_c
        << ',' << r.gamma_required << ',' << r.rho << ',' << r.rho_r << ',' << r.sup_error << ',' << r.sup_x_tilde
        << ',' << r.sup_reference_error << ',' << err << '\n';
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace safetube
