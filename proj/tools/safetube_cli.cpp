#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "safetube/errors.hpp"
#include "safetube/metric.hpp"
#include "safetube/pipeline.hpp"
#include "safetube/report.hpp"
#include "safetube/scenario.hpp"
#include "safetube/sim.hpp"

namespace {

using namespace safetube;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitDiverged = 3;

struct Common {
  std::string builtin;
  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  auto* b = cmd->add_option("--builtin", c.builtin, "Builtin example")->check(CLI::IsMember({"ex1", "ex2"}));
  auto* s = cmd->add_option("--scenario", c.scenario_path, "Scenario JSON file")->check(CLI::ExistingFile);
  b->excludes(s);
  cmd->add_option("--out", c.out_dir, "Output directory");
  cmd->add_option("--seed", c.seed, "Random seed for sampling");
}

Scenario load(const Common& c) {
  if (c.builtin.empty() == c.scenario_path.empty()) throw UsageError("exactly one of --builtin or --scenario is required");
  Scenario s = c.builtin.empty() ? load_scenario(c.scenario_path) : builtin_scenario(c.builtin);
  if (!c.out_dir.empty()) s.output_dir = c.out_dir;
  if (c.seed) {
    s.seed = *c.seed;
    s.sampling.seed = *c.seed;
  }
  return s;
}

std::string path_in(const Scenario& s, const std::string& file) {
  return (std::filesystem::path(s.output_dir) / file).string();
}

void warn_adaptation_rate(const L1Config& l1, double dt) {
  if (l1.gamma * dt > 1e3) {
    std::cerr << "warning: Gamma * dt = " << l1.gamma * dt
              << " exceeds 1e3; the explicit adaptation update may be unstable at this step\n";
  }
}

void print_certificate(const TubeCertificate& c) {
  std::cout << "omega = " << c.omega << ", Gamma = " << c.gamma << "\n"
            << "rho_r = " << c.rho_r << ", rho = " << c.rho << ", E0 = " << c.energy0 << "\n"
            << "zeta = (" << c.zeta.z1 << ", " << c.zeta.z2 << ", " << c.zeta.z3 << ")\n"
            << "margins: reference tube " << c.margin_a << ", bandwidth " << c.margin_b << ", adaptation rate " << c.margin_c
            << " (Gamma required " << c.gamma_required << ")\n"
            << "certificate " << (c.valid ? "VALID" : "INVALID") << (c.binding.empty() ? "" : ", binding condition " + c.binding)
            << "\n";
}

int cmd_certify(const Common& c) {
  const Scenario s = load(c);
  const ResolvedScenario r = resolve(s);
  const CertifyOutcome out = certify_scenario(r, s.eps, s.rho_a, s.l1.omega, s.l1.gamma, s.l1, s.sampling);
  write_json(path_in(s, "certificate.json"), certificate_json(out.certificate, s.name));
  print_certificate(out.certificate);
  if (out.search && !out.search->feasible) {
    std::cerr << "no feasible bandwidth in [" << s.l1.omega_min << ", " << s.l1.omega_max
              << "]; binding condition " << out.search->binding << "\n";
  }
  return out.feasible() ? kExitOk : kExitInfeasible;
}

int cmd_simulate(const Common& c, bool no_l1) {
  const Scenario s = load(c);
  const ResolvedScenario r = resolve(s);
  const CertifyOutcome cert = certify_scenario(r, s.eps, s.rho_a, s.l1.omega, s.l1.gamma, s.l1, s.sampling);
  write_json(path_in(s, "certificate.json"), certificate_json(cert.certificate, s.name));
  if (!no_l1) warn_adaptation_rate(cert.l1, r.sim.dt);

  const std::string main_name = no_l1 ? "trajectory_ccm_only.csv" : "trajectory_l1.csv";
  Trajectory main_run;
  try {
    main_run = no_l1 ? integrate_ccm_only(r.model, r.metric, r.desired, r.x0, r.sim)
                     : integrate_closed_loop(r.model, r.metric, cert.l1, r.desired, r.x0, r.sim);
  } catch (const SimulationDiverged& e) {
    write_trajectory_csv(path_in(s, main_name), e.partial(), &cert.certificate);
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  }
  write_trajectory_csv(path_in(s, main_name), main_run, &cert.certificate);

  std::optional<Trajectory> overlay;
  if (!no_l1) {
    try {
      overlay = integrate_ccm_only(r.model, r.metric, r.desired, r.x0, r.sim);
      write_trajectory_csv(path_in(s, "trajectory_ccm_only.csv"), *overlay, nullptr);
    } catch (const SimulationDiverged& e) {
      std::cerr << "warning: CCM-only overlay diverged: " << e.what() << "\n";
    }
  }
  const Trajectory reference = integrate_reference(r.model, r.metric, cert.l1.omega, r.desired, r.x0, r.sim);
  write_trajectory_csv(path_in(s, "trajectory_reference.csv"), reference, &cert.certificate);
  const Trajectory nominal = integrate_nominal_ccm(r.model, r.metric, r.desired, r.x0, r.sim);
  write_trajectory_csv(path_in(s, "trajectory_nominal.csv"), nominal, &cert.certificate);

  const ContainmentReport rep = containment(main_run, cert.certificate, &r.safe_set, &reference);
  write_json(path_in(s, "containment.json"), containment_json(rep));
  write_plot_data_csv(path_in(s, "plot_data.csv"), main_run, overlay ? &*overlay : (no_l1 ? &main_run : nullptr),
                      &reference, cert.certificate);

  std::cout << (no_l1 ? "CCM-only" : "L1") << " run: sup |x| = " << main_run.max_state_norm()
            << ", sup |x - x*| = " << main_run.max_tracking_error() << ", rho = " << cert.certificate.rho
            << ", contained = " << (rep.contained() ? "yes" : "no") << "\n"
            << "reference run: sup |x_r - x*| = " << reference.max_tracking_error()
            << ", rho_r = " << cert.certificate.rho_r << "\n"
            << "outputs written to " << s.output_dir << "\n";
  return kExitOk;
}

std::vector<double> or_default(const std::vector<double>& v, std::optional<double> fallback) {
  if (!v.empty()) return v;
  if (!fallback) throw UsageError("sweep needs explicit values when the scenario leaves a parameter on \"auto\"");
  return {*fallback};
}

int cmd_sweep(const Common& c, const std::vector<double>& omegas, const std::vector<double>& gammas,
              const std::vector<double>& epss, const std::vector<double>& rhos, int threads, bool no_sim) {
  const Scenario s = load(c);
  const ResolvedScenario r = resolve(s);
  std::vector<SweepPoint> pts;
  for (double w : or_default(omegas, s.l1.omega))
    for (double g : or_default(gammas, s.l1.gamma))
      for (double e : or_default(epss, s.eps))
        for (double ra : or_default(rhos, s.rho_a)) pts.push_back(SweepPoint{w, g, e, ra});
  const std::vector<SweepRow> rows = run_sweep(r, pts, s.sampling, threads, !no_sim);
  write_sweep_csv(path_in(s, "sweep.csv"), rows);
  for (const auto& row : rows) {
    std::cout << "omega=" << row.point.omega << " Gamma=" << row.point.gamma << " eps=" << row.point.eps
              << " rho_a=" << row.point.rho_a << " -> " << (row.certified ? "certified" : "not certified");
    if (!row.binding.empty()) std::cout << " (" << row.binding << ")";
    if (!no_sim && row.error.empty()) std::cout << ", sup error " << row.sup_error << ", sup xtilde " << row.sup_x_tilde;
    if (!row.error.empty()) std::cout << ", error: " << row.error;
    std::cout << "\n";
  }
  std::cout << "sweep written to " << path_in(s, "sweep.csv") << "\n";
  return kExitOk;
}

int cmd_check_ccm(const Common& c, int samples) {
  const Scenario s = load(c);
  const ResolvedScenario r = resolve(s);
  SampleSpec spec;
  spec.region = r.metric_domain;
  spec.count = samples;
  spec.seed = s.sampling.seed;
  const CcmCheckReport rep = ccm_check(r.model, r.metric, spec);
  write_json(path_in(s, "ccm_check.json"), ccm_report_json(rep));
  std::cout << "eigenvalues of M in [" << rep.eig_min << ", " << rep.eig_max << "], claimed [" << r.metric.alpha_lower()
            << ", " << r.metric.alpha_upper() << "]\n"
            << "contraction max eigenvalue " << rep.contraction_max_eig << "\n"
            << "CCM conditions " << (rep.pass ? "PASS" : "FAIL") << " on " << rep.samples << " samples\n";
  return rep.pass ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contraction-metric tracking with L1 adaptation: certificates and simulations"};
  app.require_subcommand(1);

  Common certify_opts, simulate_opts, sweep_opts, check_opts;
  auto* certify = app.add_subcommand("certify", "Compute the tube certificate");
  add_common(certify, certify_opts);

  bool no_l1 = false;
  auto* simulate = app.add_subcommand("simulate", "Run closed-loop, reference and nominal simulations");
  add_common(simulate, simulate_opts);
  simulate->add_flag("--no-l1", no_l1, "Disable the adaptive augmentation");

  std::vector<double> omegas, gammas, epss, rhos;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool no_sim = false;
  auto* sweep = app.add_subcommand("sweep", "Certify and simulate a parameter grid");
  add_common(sweep, sweep_opts);
  sweep->add_option("--omega", omegas, "Filter bandwidths")->delimiter(',');
  sweep->add_option("--gamma", gammas, "Adaptation rates")->delimiter(',');
  sweep->add_option("--eps", epss, "Tube parameter eps")->delimiter(',');
  sweep->add_option("--rho-a", rhos, "Tube parameter rho_a")->delimiter(',');
  sweep->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_flag("--no-sim", no_sim, "Certificates only");

  int samples = 10000;
  auto* check = app.add_subcommand("check-ccm", "Check the CCM conditions by sampling");
  add_common(check, check_opts);
  check->add_option("--samples", samples, "Number of random samples")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*certify) return cmd_certify(certify_opts);
    if (*simulate) return cmd_simulate(simulate_opts, no_l1);
    if (*sweep) return cmd_sweep(sweep_opts, omegas, gammas, epss, rhos, threads, no_sim);
    if (*check) return cmd_check_ccm(check_opts, samples);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CertificateError& e) {
    std::cerr << "certificate error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const SimulationDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
