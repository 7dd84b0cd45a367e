#include "safetube/geodesic.hpp"

#include <cmath>

#include "safetube/errors.hpp"

namespace safetube {

namespace {

constexpr double kTrivialSeparation = 1e-12;

}  // namespace

Mat spline_differentiation_matrix(int segments) {
  const int N = segments;
  if (N < 4) throw ContractViolation("spline differentiation needs at least 4 segments");
  const double h = 1.0 / N;
  Mat S = Mat::Zero(N + 1, N + 1);
  Mat R = Mat::Zero(N + 1, N + 1);
  for (int i = 1; i < N; ++i) {
    S(i, i - 1) = 1.0;
    S(i, i) = 4.0;
    S(i, i + 1) = 1.0;
    R(i, i + 1) = 3.0 / h;
    R(i, i - 1) = -3.0 / h;
  }
  // Third-derivative continuity across the first and last interior knots.
  S(0, 0) = 1.0;
  S(0, 2) = -1.0;
  R(0, 0) = -2.0 / h;
  R(0, 1) = 4.0 / h;
  R(0, 2) = -2.0 / h;
  S(N, N - 2) = 1.0;
  S(N, N) = -1.0;
  R(N, N - 2) = -2.0 / h;
  R(N, N - 1) = 4.0 / h;
  R(N, N) = -2.0 / h;
  return S.partialPivLu().solve(R);
}

SplineQuadrature spline_quadrature(int segments) {
  const Mat D = spline_differentiation_matrix(segments);
  const int N = segments;
  const double h = 1.0 / N;
  // Three-point Gauss-Legendre rule on [0, 1].
  const double r = std::sqrt(0.6);
  const double tau[3] = {0.5 * (1.0 - r), 0.5, 0.5 * (1.0 + r)};
  const double wt[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  SplineQuadrature q;
  q.positions = Mat::Zero(3 * N, N + 1);
  q.velocities = Mat::Zero(3 * N, N + 1);
  q.weights = Vec::Zero(3 * N);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < 3; ++k) {
      const double t = tau[k];
      const double t2 = t * t, t3 = t2 * t;
      const int row = 3 * i + k;
      // Cubic Hermite basis on the segment with nodal slopes taken from D.
      const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
      const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1, d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
      q.positions(row, i) += h00;
      q.positions(row, i + 1) += h01;
      q.positions.row(row) += h * (h10 * D.row(i) + h11 * D.row(i + 1));
      q.velocities(row, i) += d00 / h;
      q.velocities(row, i + 1) += d01 / h;
      q.velocities.row(row) += d10 * D.row(i) + d11 * D.row(i + 1);
      q.weights(row) = h * wt[k];
    }
  }
  return q;
}

std::vector<double> GeodesicCurve::metric_speeds(const MetricField& field) const {
  std::vector<double> out;
  out.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Mat M = eval_metric(field, nodes[i]).M;
    out.push_back(std::sqrt(std::max(0.0, velocities[i].dot(M * velocities[i]))));
  }
  return out;
}

GeodesicSolver::GeodesicSolver(MetricField field, GeodesicOptions options)
    : field_(std::move(field)), options_(options) {
  if (options_.segments < 4) throw ContractViolation("geodesic segment count must be at least 4");
  if (options_.max_iterations < 1) throw ContractViolation("geodesic iteration cap must be positive");
  D_ = spline_differentiation_matrix(options_.segments);
  quad_ = spline_quadrature(options_.segments);
}

double GeodesicSolver::energy_of(const Mat& g) const {
  const Mat x = quad_.positions * g;
  const Mat v = quad_.velocities * g;
  double e = 0.0;
  for (int i = 0; i < x.rows(); ++i) {
    const Vec xi = x.row(i).transpose();
    const Vec vi = v.row(i).transpose();
    e += quad_.weights(i) * vi.dot(eval_metric(field_, xi).M * vi);
  }
  return e;
}

GeodesicSolver::Eval GeodesicSolver::evaluate(const Mat& g, bool with_hessian) const {
  const int N = options_.segments;
  const int n = field_.dim();
  const int dof = (N - 1) * n;
  const Mat& P = quad_.positions;
  const Mat& V = quad_.velocities;
  const Vec& w = quad_.weights;
  const Mat x = P * g;
  const Mat v = V * g;
  const int nq = static_cast<int>(x.rows());

  std::vector<Mat> M(nq);
  std::vector<Vec> Mv(nq);
  std::vector<Vec> gk(nq);
  std::vector<Mat> C(nq);
  Eval out;
  for (int q = 0; q < nq; ++q) {
    const MetricEval ev = eval_metric(field_, x.row(q).transpose());
    const Vec vq = v.row(q).transpose();
    M[q] = ev.M;
    Mv[q] = ev.M * vq;
    out.energy += w(q) * vq.dot(Mv[q]);
    gk[q].resize(n);
    C[q].resize(n, n);
    for (int j = 0; j < n; ++j) {
      const Vec c = ev.dM[j] * vq;
      C[q].col(j) = c;
      gk[q](j) = vq.dot(c);
    }
  }

  out.grad = Vec::Zero(dof);
  for (int k = 1; k < N; ++k) {
    Vec gr = Vec::Zero(n);
    for (int q = 0; q < nq; ++q) gr += w(q) * (P(q, k) * gk[q] + 2.0 * V(q, k) * Mv[q]);
    out.grad.segment((k - 1) * n, n) = gr;
  }
  if (!with_hessian) return out;

  out.hess = Mat::Zero(dof, dof);
  for (int k = 1; k < N; ++k) {
    for (int l = k; l < N; ++l) {
      Mat blk = Mat::Zero(n, n);
      for (int q = 0; q < nq; ++q) {
        const double vk = V(q, k), vl = V(q, l), pk = P(q, k), pl = P(q, l);
        if (vk == 0.0 && vl == 0.0) continue;
        blk += (2.0 * w(q) * vk * vl) * M[q] + (2.0 * w(q) * vk * pl) * C[q] + (2.0 * w(q) * pk * vl) * C[q].transpose();
      }
      out.hess.block((k - 1) * n, (l - 1) * n, n, n) = blk;
      if (l != k) out.hess.block((l - 1) * n, (k - 1) * n, n, n) = blk.transpose();
    }
  }
  out.hess = sym(out.hess);
  return out;
}

GeodesicCurve GeodesicSolver::finish(const Mat& g, int iterations, double grad_norm, bool converged) const {
  const int N = options_.segments;
  GeodesicCurve c;
  c.s = Vec::LinSpaced(N + 1, 0.0, 1.0);
  const Mat v = D_ * g;
  for (int i = 0; i <= N; ++i) {
    c.nodes.push_back(g.row(i).transpose());
    c.velocities.push_back(v.row(i).transpose());
  }
  c.energy = std::max(0.0, energy_of(g));
  c.iterations = iterations;
  c.gradient_norm = grad_norm;
  c.converged = converged;
  c.degraded = !converged;
  const double sep2 = (c.nodes.back() - c.nodes.front()).squaredNorm();
  c.exceeds_upper_bound = c.energy > field_.alpha_upper() * sep2 * 1.01;
  return c;
}

GeodesicCurve GeodesicSolver::solve(const Vec& p, const Vec& q, const GeodesicCurve* warm) {
  const int N = options_.segments;
  const int n = field_.dim();
  if (p.size() != n || q.size() != n) throw ContractViolation("geodesic endpoints have the wrong dimension");
  if (!p.allFinite() || !q.allFinite()) throw ContractViolation("geodesic endpoints must be finite");

  // Endpoints must lie in the metric domain even for the trivial curve.
  eval_metric(field_, p);
  eval_metric(field_, q);

  if ((p - q).norm() < kTrivialSeparation) {
    GeodesicCurve c;
    c.s = Vec::LinSpaced(N + 1, 0.0, 1.0);
    c.nodes.assign(N + 1, p);
    c.velocities.assign(N + 1, Vec::Zero(n));
    return c;
  }

  Mat g(N + 1, n);
  const bool use_warm = warm && static_cast<int>(warm->nodes.size()) == N + 1 && warm->nodes.front().size() == n;
  for (int i = 0; i <= N; ++i) {
    const double s = static_cast<double>(i) / N;
    if (use_warm) {
      const Vec dp = p - warm->nodes.front();
      const Vec dq = q - warm->nodes.back();
      g.row(i) = (warm->nodes[i] + (1.0 - s) * dp + s * dq).transpose();
    } else {
      g.row(i) = ((1.0 - s) * p + s * q).transpose();
    }
  }
  g.row(0) = p.transpose();
  g.row(N) = q.transpose();

  const int dof = (N - 1) * n;
  auto interior = [&](const Mat& pts) {
    Vec z(dof);
    for (int k = 1; k < N; ++k) z.segment((k - 1) * n, n) = pts.row(k).transpose();
    return z;
  };
  auto with_interior = [&](const Vec& z) {
    Mat out = g;
    for (int k = 1; k < N; ++k) out.row(k) = z.segment((k - 1) * n, n).transpose();
    return out;
  };

  double damping = 0.0;
  Eval cur = evaluate(g, true);
  int it = 0;
  double gnorm = cur.grad.norm();
  bool converged = gnorm <= options_.gradient_tol * (1.0 + cur.energy);
  while (!converged && it < options_.max_iterations) {
    ++it;
    const Vec z = interior(g);
    const double hscale = std::max(1e-300, cur.hess.diagonal().cwiseAbs().maxCoeff());
    Vec step;
    bool have_step = false;
    for (int attempt = 0; attempt < 12 && !have_step; ++attempt) {
      Mat h = cur.hess;
      h.diagonal().array() += damping * hscale;
      Eigen::LLT<Mat> llt(h);
      if (llt.info() == Eigen::Success) {
        step = -llt.solve(cur.grad);
        have_step = step.allFinite() && step.dot(cur.grad) < 0.0;
      }
      if (!have_step) damping = damping == 0.0 ? 1e-8 : damping * 10.0;
    }
    if (!have_step) step = -cur.grad / hscale;

    double t = 1.0;
    bool accepted = false;
    Mat trial;
    double trial_e = 0.0;
    for (int ls = 0; ls < 30; ++ls) {
      trial = with_interior(z + t * step);
      try {
        trial_e = energy_of(trial);
      } catch (const MetricDomainError&) {
        t *= 0.5;
        continue;
      }
      if (trial_e <= cur.energy + 1e-4 * t * step.dot(cur.grad)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Plain gradient step with its own backtracking before giving up.
      const Vec gd = -cur.grad / hscale;
      t = 1.0;
      for (int ls = 0; ls < 40 && !accepted; ++ls, t *= 0.5) {
        trial = with_interior(z + t * gd);
        try {
          trial_e = energy_of(trial);
        } catch (const MetricDomainError&) {
          continue;
        }
        accepted = trial_e < cur.energy;
      }
      if (!accepted) break;
      damping = std::max(damping * 10.0, 1e-6);
    } else {
      damping *= 0.1;
      if (damping < 1e-12) damping = 0.0;
    }
    g = trial;
    cur = evaluate(g, true);
    gnorm = cur.grad.norm();
    converged = gnorm <= options_.gradient_tol * (1.0 + cur.energy);
  }
  return finish(g, it, gnorm, converged);
}

GeodesicCurve solve_geodesic(const MetricField& field, const Vec& p, const Vec& q, const GeodesicCurve* warm,
                             GeodesicOptions options) {
  GeodesicSolver solver(field, options);
  return solver.solve(p, q, warm);
}

double energy(const GeodesicCurve& curve) { return curve.energy; }

Vec endpoint_velocity(const GeodesicCurve& curve, CurveEnd end) {
  if (curve.velocities.empty()) throw ContractViolation("endpoint_velocity: empty curve");
  return end == CurveEnd::Start ? curve.velocities.front() : curve.velocities.back();
}

}  // namespace safetube
