#include "safetube/certification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "safetube/errors.hpp"

namespace safetube {

namespace {

constexpr double kPoleGuard = 1e-9;
constexpr double kSingularFloor = 1e-10;

DeltaEntry closed_form(double v) { return DeltaEntry{v, Provenance::ClosedForm, 0, 1.0}; }
DeltaEntry user(double v) { return DeltaEntry{v, Provenance::User, 0, 1.0}; }

/// Running maximum of a sampled quantity.
struct SupTracker {
  double value = 0.0;
  void add(double v) {
    if (!std::isfinite(v)) throw NumericFault("non-finite value while sampling a bound");
    value = std::max(value, v);
  }
};

double sum_of_norms(const std::vector<Mat>& mats) {
  double s = 0.0;
  for (const Mat& m : mats) s += norm2(m);
  return s;
}

double smallest_positive_singular(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& sv = svd.singularValues();
  const double tol = kSingularFloor * std::max(1.0, sv(0));
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) best = std::min(best, sv(i));
  return best;
}

}  // namespace

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Sampled:
      return "sampled";
    case Provenance::User:
      return "user";
    case Provenance::ClosedForm:
      return "closed_form";
  }
  return "unknown";
}

std::vector<std::pair<std::string, const DeltaEntry*>> DeltaConstants::entries() const {
  return {{"f", &f},
          {"fx", &fx},
          {"B", &B},
          {"Bx", &Bx},
          {"bx", &bx},
          {"h", &h},
          {"hx", &hx},
          {"ht", &ht},
          {"B_pinv", &B_pinv},
          {"B_pinv_x", &B_pinv_x},
          {"ustar", &ustar},
          {"Mx", &Mx},
          {"Psi_x", &Psi_x},
          {"delta_u", &delta_u},
          {"xr_dot", &xr_dot},
          {"x_dot", &x_dot},
          {"x_tilde", &x_tilde},
          {"eta_tilde", &eta_tilde},
          {"theta", &theta},
          {"gamma_s_dot", &gamma_s_dot},
          {"Psi_dot", &Psi_dot}};
}

DeltaConstants DeltaConstants::with_bandwidth(double w) const {
  if (!(w > 0.0)) throw ContractViolation("bandwidth must be positive");
  DeltaConstants d = *this;
  d.omega = w;
  d.eta_tilde = closed_form((B_pinv_x.value * x_dot.value + (filter_norm_sC(w) + A_m_norm) * B_pinv.value) *
                            x_tilde.value);
  d.theta = closed_form(B.value * alpha_upper * d.eta_tilde.value / lambda);
  return d;
}

DeltaConstants estimate_deltas(const DynamicsModel& model, const MetricField& field, const AssumptionBounds& bounds,
                               double rho, const DesiredTrajectory& traj, const L1Config& l1,
                               const DeltaSampling& sampling) {
  if (!(rho > 0.0)) throw ContractViolation("tube radius must be positive");
  if (traj.size() == 0) throw ContractViolation("desired trajectory is empty");
  if (model.n != field.dim()) throw ContractViolation("model and metric dimensions differ");
  if (sampling.time_points < 1 || sampling.ball_points < 0 || !(sampling.inflation >= 1.0)) {
    throw ContractViolation("invalid sampling specification");
  }
  bounds.validate(model.has_uncertainty());
  const int n = model.n;

  // Tube cover: trajectory samples plus uniform points of the rho-ball around each.
  std::mt19937_64 rng(sampling.seed);
  const SafeSet unit_ball = SafeSet::ball(Vec::Zero(n), 1.0);
  std::uniform_real_distribution<double> time_dist(0.0, traj.horizon());
  std::vector<Vec> pts;
  std::vector<double> times;
  const int tp = std::min<int>(sampling.time_points, static_cast<int>(traj.size()));
  for (int k = 0; k < tp; ++k) {
    const std::size_t idx =
        tp == 1 ? 0 : static_cast<std::size_t>(std::llround(double(k) * double(traj.size() - 1) / double(tp - 1)));
    const Vec& c = traj.states()[idx];
    pts.push_back(c);
    for (int j = 0; j < sampling.ball_points; ++j) pts.push_back(c + rho * unit_ball.sample(rng));
  }
  for (std::size_t i = 0; i < pts.size(); ++i) times.push_back(time_dist(rng));

  SupTracker sf, sfx, sB, sBx, sbx, sh, shx, sht, sBp, sBpx, sMx, sdu;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec& x = pts[i];
    const Mat b = model.input_matrix(x);
    const auto db = model.input_partials(x);
    sf.add(model.drift(x).norm());
    sfx.add(norm2(model.drift_jacobian(x)));
    sB.add(norm2(b));
    sBx.add(sum_of_norms(db));
    double col_sum = 0.0;
    for (int j = 0; j < model.m; ++j) {
      Mat dbj(n, n);
      for (int k = 0; k < n; ++k) dbj.col(k) = db[k].col(j);
      col_sum += norm2(dbj);
    }
    sbx.add(col_sum);
    sBp.add(norm2(input_pseudo_inverse(b)));
    sBpx.add(sum_of_norms(input_pseudo_inverse_partials(b, db)));

    if (model.has_uncertainty()) {
      const double t = times[i];
      sh.add(model.uncertainty(t, x).norm());
      const auto hx_fn = [&](const Vec& y) { return model.uncertainty(t, y); };
      shx.add(norm2(fd_jacobian(hx_fn, x)));
      const double dt = 1e-6 * (1.0 + std::abs(t));
      const double tc = std::max(t, dt);
      sht.add(((model.uncertainty(tc + dt, x) - model.uncertainty(tc - dt, x)) / (2.0 * dt)).norm());
    }

    const MetricEval ev = eval_metric(field, x);
    sMx.add(sum_of_norms(ev.dM));

    const MetricFactors fac = factorize(field, x);
    const Mat l_inv = fac.L.triangularView<Eigen::Upper>().solve(Mat::Identity(n, n));
    const Mat Fm = dual_F(model, field, x);
    Eigen::SelfAdjointEigenSolver<Mat> es(sym(l_inv.transpose() * Fm * l_inv), Eigen::EigenvaluesOnly);
    const double sigma = smallest_positive_singular(b.transpose() * l_inv);
    if (!(sigma >= kSingularFloor) || !std::isfinite(sigma)) {
      throw CertificateError("smallest nonzero singular value of B^T L^{-1} vanishes in the tube");
    }
    sdu.add(std::max(0.0, 0.5 * es.eigenvalues()(n - 1) / sigma));
  }

  const int count = static_cast<int>(pts.size());
  const double infl = sampling.inflation;
  auto pick = [&](const std::optional<double>& given, const SupTracker& s) {
    if (given) return user(*given);
    return DeltaEntry{s.value * infl, Provenance::Sampled, count, infl};
  };

  DeltaConstants d;
  d.rho = rho;
  d.lambda = field.lambda();
  d.alpha_lower = field.alpha_lower();
  d.alpha_upper = field.alpha_upper();
  d.eps_proj = l1.eps_proj;
  d.A_m_norm = norm2(l1.A_m);

  d.f = pick(bounds.delta_f, sf);
  d.fx = pick(bounds.delta_fx, sfx);
  d.B = pick(bounds.delta_B, sB);
  d.Bx = pick(bounds.delta_Bx, sBx);
  d.bx = pick(bounds.delta_bx, sbx);
  if (model.has_uncertainty()) {
    d.h = pick(bounds.delta_h, sh);
    d.hx = pick(bounds.delta_hx, shx);
    d.ht = pick(bounds.delta_ht, sht);
  } else {
    d.h = closed_form(0.0);
    d.hx = closed_form(0.0);
    d.ht = closed_form(0.0);
  }
  d.B_pinv = pick(bounds.delta_B_pinv, sBp);
  d.B_pinv_x = pick(bounds.delta_B_pinv_x, sBpx);
  d.ustar = bounds.delta_ustar ? user(*bounds.delta_ustar) : closed_form(traj.max_input_norm());
  d.Mx = field.is_constant() ? closed_form(0.0) : DeltaEntry{sMx.value * infl, Provenance::Sampled, count, infl};
  d.delta_u = DeltaEntry{sdu.value * infl, Provenance::Sampled, count, infl};

  const double al = d.alpha_lower, au = d.alpha_upper;
  const double h_inflated = (1.0 + d.eps_proj) * d.h.value;

  d.Psi_x = closed_form(2.0 * d.Bx.value + d.B.value * d.Mx.value / al);
  d.xr_dot = closed_form(d.f.value + d.B.value * (filter_norm_I_minus_C() * d.h.value + d.ustar.value +
                                                 rho * d.delta_u.value));
  d.x_dot = closed_form(d.f.value + d.B.value * (2.0 * h_inflated + d.ustar.value + rho * d.delta_u.value));

  Eigen::SelfAdjointEigenSolver<Mat> pe(l1.P, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Mat> qe(l1.Q, Eigen::EigenvaluesOnly);
  const double p_lo = pe.eigenvalues()(0), p_hi = pe.eigenvalues()(n - 1), q_lo = qe.eigenvalues()(0);
  d.x_tilde = closed_form(std::sqrt(4.0 * p_hi * h_inflated * (d.ht.value + d.hx.value * d.x_dot.value) / (p_lo * q_lo) +
                                    4.0 * h_inflated * h_inflated / p_lo));

  d.gamma_s_dot = closed_form(std::sqrt(au / al) *
                              (d.fx.value + (d.h.value + d.ustar.value + rho * d.delta_u.value) * d.bx.value +
                               (d.hx.value + std::sqrt(al / au) * d.delta_u.value) * d.B.value));
  d.Psi_dot = closed_form(au * (d.B.value * d.gamma_s_dot.value +
                                d.B.value * d.Mx.value * d.x_dot.value / std::sqrt(au * al) +
                                d.Bx.value * d.x_dot.value));
  return d.with_bandwidth(l1.omega);
}

Zeta zeta(double omega, const DeltaConstants& d, double rho) {
  if (!(omega > 0.0)) throw ContractViolation("bandwidth must be positive");
  const double lam = d.lambda;
  if (std::abs(2.0 * lam - omega) < kPoleGuard) {
    throw CertificateError("bandwidth coincides with 2*lambda; choose a different omega");
  }
  const double bracket = d.h.value / std::abs(2.0 * lam - omega) +
                         (d.ht.value + d.hx.value * d.xr_dot.value) / (2.0 * lam * omega);
  Zeta z;
  z.z1 = 2.0 * rho * d.B.value * (d.alpha_upper / d.alpha_lower) * bracket;
  z.z2 = d.alpha_upper * d.Psi_x.value * bracket;
  z.z3 = d.alpha_upper * d.hx.value * (4.0 * lam * d.B.value + d.Psi_dot.value) / (lam * omega);
  return z;
}

double candidate_rho(const MetricField& field, double eps, double rho_a, const Vec& x0, const Vec& x0_star) {
  return std::sqrt(field.alpha_upper() / field.alpha_lower()) * (x0_star - x0).norm() + eps + rho_a;
}

double TubeCertificate::mu(double T) const {
  return std::sqrt(std::exp(-2.0 * lambda * T) * energy0 / alpha_lower + zeta.z1);
}

double TubeCertificate::delta(double T) const { return mu(T) + rho_a; }

TubeCertificate check_conditions(const TubeInputs& in, const DeltaConstants& d_in, const MetricField& field,
                                 const GeodesicOptions& geo) {
  if (!(in.eps > 0.0) || !(in.rho_a > 0.0)) throw ContractViolation("eps and rho_a must be positive");
  if (!(in.gamma > 0.0)) throw ContractViolation("adaptation rate must be positive");
  TubeCertificate c;
  c.eps = in.eps;
  c.rho_a = in.rho_a;
  c.omega = in.omega;
  c.gamma = in.gamma;
  c.lambda = field.lambda();
  c.alpha_lower = field.alpha_lower();
  c.rho_r = std::sqrt(field.alpha_upper() / field.alpha_lower()) * (in.x0_star - in.x0).norm() + in.eps;
  c.rho = c.rho_r + c.rho_a;
  c.rho_mismatch = std::abs(c.rho - d_in.rho) > 1e-12 * (1.0 + c.rho);
  c.energy0 = solve_geodesic(field, in.x0_star, in.x0, nullptr, geo).energy;
  c.deltas = d_in.with_bandwidth(in.omega);
  c.zeta = zeta(in.omega, c.deltas, c.rho);
  c.norm_sC = filter_norm_sC(in.omega);
  c.norm_C = filter_norm_C();
  c.norm_I_minus_C = filter_norm_I_minus_C();

  c.margin_a = c.rho_r * c.rho_r - c.energy0 / c.alpha_lower - c.zeta.z1;
  c.margin_b = c.alpha_lower - c.zeta.z2 - c.zeta.z3;
  if (c.margin_b > 0.0) {
    const double root = c.deltas.theta.value / (c.rho_a * c.margin_b);
    c.gamma_required = root * root;
    c.margin_c = std::sqrt(c.gamma) - root;
  } else {
    c.gamma_required = std::numeric_limits<double>::infinity();
    c.margin_c = -std::numeric_limits<double>::infinity();
  }
  if (!(c.margin_a > 0.0)) {
    c.binding = "reference_tube";
  } else if (!(c.margin_b > 0.0)) {
    c.binding = "bandwidth";
  } else if (!(c.margin_c > 0.0)) {
    c.binding = "adaptation_rate";
  }
  c.valid = c.binding.empty();
  return c;
}

SearchResult search_params(const DeltaConstants& d, const MetricField& field, double eps, double rho_a,
                           const Vec& x0, const Vec& x0_star, double omega_min, double omega_max, double margin,
                           int grid_points) {
  if (!(omega_min > 0.0) || !(omega_max >= omega_min) || !std::isfinite(omega_max)) {
    throw ContractViolation("search range must be finite and positive");
  }
  if (grid_points < 2 || !(margin >= 0.0)) throw ContractViolation("invalid search grid");
  const double energy0 = solve_geodesic(field, x0_star, x0).energy;
  const double rho_r = std::sqrt(field.alpha_upper() / field.alpha_lower()) * (x0_star - x0).norm() + eps;
  const double rho = rho_r + rho_a;
  const double al = field.alpha_lower();

  SearchResult res;
  res.binding = "reference_tube";
  for (int k = 0; k < grid_points; ++k) {
    const double w = omega_min * std::pow(omega_max / omega_min, double(k) / (grid_points - 1));
    if (w <= 2.0 * field.lambda()) continue;
    const DeltaConstants dw = d.with_bandwidth(w);
    const Zeta z = zeta(w, dw, rho);
    const bool ok_a = rho_r * rho_r >= (1.0 + margin) * (energy0 / al + z.z1);
    const bool ok_b = al >= (1.0 + margin) * (z.z2 + z.z3);
    if (!ok_a || !ok_b) {
      res.binding = ok_a ? "bandwidth" : "reference_tube";
      continue;
    }
    const double root = dw.theta.value / (rho_a * (al - z.z2 - z.z3));
    res.feasible = true;
    res.omega = w;
    res.gamma = std::max(1.0, (1.0 + margin) * (1.0 + margin) * root * root);
    res.binding.clear();
    res.certificate = check_conditions(TubeInputs{w, res.gamma, eps, rho_a, x0, x0_star}, d, field);
    return res;
  }
  return res;
}

UltimateBounds ultimate_bounds(const TubeCertificate& cert, double T) {
  if (!(T >= 0.0)) throw ContractViolation("ultimate bound time must be nonnegative");
  return UltimateBounds{cert.mu(T), cert.delta(T)};
}

}  // namespace safetube
