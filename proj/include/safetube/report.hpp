#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "safetube/certification.hpp"
#include "safetube/metric.hpp"
#include "safetube/pipeline.hpp"
#include "safetube/sim.hpp"

namespace safetube {

nlohmann::json certificate_json(const TubeCertificate& cert, const std::string& scenario_name);
nlohmann::json containment_json(const ContainmentReport& rep);
nlohmann::json ccm_report_json(const CcmCheckReport& rep);

/// Columns: t, x_i, x_star_i, u_c_j, u_a_j, sigma_hat_j, xtilde_norm, energy, dist, rho, delta_t.
void write_trajectory_csv(const std::string& path, const Trajectory& traj, const TubeCertificate* cert);

/// Columns: t, dist_l1, dist_ccm_only, dist_reference, rho, rho_r, delta_t, mu_t. Missing runs are left empty.
void write_plot_data_csv(const std::string& path, const Trajectory& l1, const Trajectory* ccm_only,
                         const Trajectory* reference, const TubeCertificate& cert);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace safetube
