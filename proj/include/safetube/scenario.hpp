#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "safetube/certification.hpp"
#include "safetube/l1_control.hpp"
#include "safetube/metric.hpp"
#include "safetube/models.hpp"
#include "safetube/planner.hpp"
#include "safetube/polynomial.hpp"
#include "safetube/sim.hpp"

namespace safetube {

inline constexpr int kScenarioSchemaVersion = 1;

/// h_j(t, x) = state_j(x) + norm_gain_j |x| + sum_k a_k sin(w_k t + phi_k)
struct UncertaintySpec {
  std::vector<Polynomial> state;
  std::vector<double> norm_gain;
  std::vector<std::vector<std::array<double, 3>>> sinusoids;  ///< per input: {amplitude, frequency, phase}
};

struct ModelSpec {
  std::optional<std::string> builtin;
  int n = 0;
  int m = 0;
  std::vector<Polynomial> f;
  PolyMatrix B;
  std::optional<UncertaintySpec> uncertainty;
};

struct MetricSpec {
  PolyMatrix dual;
  double lambda = 0.0;
  double alpha_lower = 0.0;
  double alpha_upper = 0.0;
};

struct DesiredSpec {
  std::string kind = "constant";  ///< "constant" or "ilqr"
  Vec state;
  Vec input;
  Vec target;
  Vec Q_diag;
  Vec R_diag;
  Vec Qf_diag;
  double horizon = 0.0;
  double dt = 0.01;
};

struct L1Spec {
  std::optional<double> omega;  ///< absent = "auto"
  std::optional<double> gamma;  ///< absent = "auto"
  Vec A_m_diag;
  Vec Q_diag;
  double eps_proj = 0.1;
  double omega_min = 1.0;
  double omega_max = 1000.0;
  double search_margin = 0.1;
};

struct Obstacle {
  std::vector<std::array<double, 2>> vertices;
};

struct Scenario {
  std::string name;
  ModelSpec model;
  std::optional<MetricSpec> metric;
  AssumptionBounds bounds;
  std::optional<SafeSet> safe_set;
  Vec initial_state;
  DesiredSpec desired;
  double eps = 0.01;
  double rho_a = 0.01;
  L1Spec l1;
  double sim_dt = 1e-3;
  double sim_horizon = 10.0;
  int geodesic_segments = 8;
  std::uint64_t seed = 0;
  DeltaSampling sampling;
  std::vector<Obstacle> obstacles;
  std::string output_dir = "out";
};

/// Throws UsageError with a path-like message for schema violations.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);
nlohmann::json to_json(const Scenario& s);
/// Sorted-key, two-space-indented serialization.
std::string canonical_dump(const Scenario& s);

/// Scenarios reproducing the two builtin examples.
Scenario builtin_scenario(const std::string& id);

/// Runnable objects derived from a scenario.
struct ResolvedScenario {
  DynamicsModel model;
  MetricField metric;
  AssumptionBounds bounds;
  SafeSet safe_set;
  SafeSet metric_domain;
  DesiredTrajectory desired;  ///< on the simulation grid
  Vec x0;
  SimConfig sim;
  /// A_m, Q, P, eps_proj; omega/gamma/delta_h are placeholders until certified.
  L1Config l1_base;
};

ResolvedScenario resolve(const Scenario& s);

}  // namespace safetube
