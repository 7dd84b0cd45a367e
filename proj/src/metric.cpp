#include "safetube/metric.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "safetube/errors.hpp"

namespace safetube {

namespace {

constexpr double kEigenRelTol = 1e-9;
constexpr std::size_t kMaxViolationsKept = 32;

std::string format_state(const Vec& x) {
  std::ostringstream os;
  os << "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
  os << "]";
  return os.str();
}

}  // namespace

MetricField::MetricField(int n, MatFn dual, PartialsFn dual_partials, double lambda, double alpha_lower,
                         double alpha_upper)
    : n_(n), dual_(std::move(dual)), dual_partials_(std::move(dual_partials)), lambda_(lambda),
      alpha_lower_(alpha_lower), alpha_upper_(alpha_upper) {
  if (n_ <= 0) throw ContractViolation("metric dimension must be positive");
  if (!(lambda_ > 0.0)) throw ContractViolation("contraction rate must be positive");
  if (!(alpha_lower_ > 0.0) || !(alpha_upper_ >= alpha_lower_)) {
    throw ContractViolation("metric bounds must satisfy 0 < alpha_lower <= alpha_upper");
  }
  if (!dual_partials_) {
    dual_partials_ = [d = dual_](const Vec& x) { return fd_partials(d, x); };
  }
}

MetricField MetricField::from_polynomial(const PolyMatrix& dual, double lambda, double alpha_lower,
                                         double alpha_upper) {
  if (dual.rows() != dual.cols()) throw ContractViolation("dual metric must be square");
  const int n = dual.rows();
  std::vector<PolyMatrix> partials;
  partials.reserve(n);
  for (int i = 0; i < n; ++i) partials.push_back(dual.partial(i));
  MetricField field(
      n, [dual](const Vec& x) { return dual(x); },
      [partials](const Vec& x) {
        std::vector<Mat> out;
        out.reserve(partials.size());
        for (const auto& p : partials) out.push_back(p(x));
        return out;
      },
      lambda, alpha_lower, alpha_upper);
  field.constant_ = dual.is_constant();
  field.poly_ = dual;
  return field;
}

MetricField MetricField::constant(const Mat& dual, double lambda, double alpha_lower, double alpha_upper) {
  const int n = static_cast<int>(dual.rows());
  MetricField field = from_polynomial(PolyMatrix::constant(dual, n), lambda, alpha_lower, alpha_upper);
  return field;
}

MetricField MetricField::with_lambda(double lambda) const {
  MetricField copy = *this;
  if (!(lambda > 0.0)) throw ContractViolation("contraction rate must be positive");
  copy.lambda_ = lambda;
  return copy;
}

MetricEval eval_metric(const MetricField& field, const Vec& x) {
  if (!x.allFinite()) throw ContractViolation("eval_metric: non-finite state");
  if (x.size() != field.dim()) throw ContractViolation("eval_metric: dimension mismatch");
  MetricEval out;
  out.W = sym(field.dual(x));
  Eigen::LLT<Mat> llt(out.W);
  if (llt.info() != Eigen::Success) {
    throw MetricDomainError("metric is not positive definite at x = " + format_state(x), x);
  }
  const int n = field.dim();
  out.M = sym(llt.solve(Mat::Identity(n, n)));
  const auto dW = field.dual_partials(x);
  out.dM.reserve(dW.size());
  for (const Mat& d : dW) out.dM.push_back(sym(-out.M * d * out.M));
  return out;
}

MetricFactors factorize(const MetricField& field, const Vec& x) {
  const MetricEval ev = eval_metric(field, x);
  Eigen::LLT<Mat> llt_m(ev.M);
  Eigen::LLT<Mat> llt_w(ev.W);
  if (llt_m.info() != Eigen::Success || llt_w.info() != Eigen::Success) {
    throw MetricDomainError("metric factorization failed at x = " + format_state(x), x);
  }
  // Eigen returns lower-triangular factors with A = L L^T, so the upper factor U = L^T gives U^T U = A.
  return MetricFactors{llt_m.matrixU(), llt_w.matrixU()};
}

Mat dual_F(const DynamicsModel& model, const MetricField& field, const Vec& x) {
  const MetricEval ev = eval_metric(field, x);
  const Vec fx = model.drift(x);
  const Mat a = model.drift_jacobian(x);
  const auto dW = field.dual_partials(x);
  Mat df_w = Mat::Zero(field.dim(), field.dim());
  for (int i = 0; i < field.dim(); ++i) df_w += dW[i] * fx(i);
  return sym(-df_w + 2.0 * sym(a * ev.W) + 2.0 * field.lambda() * ev.W);
}

std::vector<Vec> sample_points(const SampleSpec& spec) {
  std::vector<Vec> pts;
  const SafeSet& region = spec.region;
  const int n = region.dim();
  if (spec.grid_per_dim > 1 && region.kind() == SafeSet::Kind::Box) {
    const int g = spec.grid_per_dim;
    std::vector<int> idx(n, 0);
    while (true) {
      Vec p(n);
      for (int i = 0; i < n; ++i) {
        const double u = -1.0 + 2.0 * idx[i] / (g - 1);
        p(i) = region.center()(i) + u * region.half_widths()(i);
      }
      pts.push_back(std::move(p));
      int k = 0;
      while (k < n && ++idx[k] == g) idx[k++] = 0;
      if (k == n) break;
    }
  }
  std::mt19937_64 rng(spec.seed);
  for (int s = 0; s < spec.count; ++s) pts.push_back(region.sample(rng));
  return pts;
}

CcmCheckReport ccm_check(const DynamicsModel& model, const MetricField& field, const SampleSpec& spec,
                         double tolerance) {
  if (model.n != field.dim()) throw ContractViolation("ccm_check: model and metric dimensions differ");
  const int n = model.n;
  const int m = model.m;
  const double lambda = field.lambda();

  CcmCheckReport rep;
  rep.tolerance = tolerance;
  rep.eig_min = std::numeric_limits<double>::infinity();
  rep.eig_max = -std::numeric_limits<double>::infinity();
  rep.eigen_margin = std::numeric_limits<double>::infinity();
  rep.contraction_max_eig = -std::numeric_limits<double>::infinity();
  rep.killing_residual.assign(m, 0.0);

  for (const Vec& x : sample_points(spec)) {
    ++rep.samples;
    const MetricEval ev = eval_metric(field, x);
    bool bad = false;

    Eigen::SelfAdjointEigenSolver<Mat> eig(ev.M, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(n - 1);
    rep.eig_min = std::min(rep.eig_min, lo);
    rep.eig_max = std::max(rep.eig_max, hi);
    const double em = std::min(lo / field.alpha_lower() - 1.0, 1.0 - hi / field.alpha_upper());
    rep.eigen_margin = std::min(rep.eigen_margin, em);
    if (em < -kEigenRelTol) bad = true;

    const Vec fx = model.drift(x);
    const Mat a = model.drift_jacobian(x);
    const Mat b = model.input_matrix(x);
    const auto db = model.input_partials(x);

    Mat df_m = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) df_m += ev.dM[i] * fx(i);
    const Mat contraction = df_m + 2.0 * sym(ev.M * a) + 2.0 * lambda * ev.M;

    // Orthonormal basis of null(B^T M) from a complete orthogonal decomposition.
    const Mat btm = b.transpose() * ev.M;
    Eigen::JacobiSVD<Mat> svd(btm, Eigen::ComputeFullV);
    const double rank_tol = 1e-10 * std::max(1.0, svd.singularValues()(0));
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > rank_tol) ++rank;
    if (rank < n) {
      const Mat basis = svd.matrixV().rightCols(n - rank);
      const Mat proj = sym(basis.transpose() * contraction * basis);
      Eigen::SelfAdjointEigenSolver<Mat> pe(proj, Eigen::EigenvaluesOnly);
      const double top = pe.eigenvalues()(pe.eigenvalues().size() - 1);
      rep.contraction_max_eig = std::max(rep.contraction_max_eig, top);
      if (top > tolerance) bad = true;
    }

    for (int j = 0; j < m; ++j) {
      const Vec bj = b.col(j);
      Mat dbj(n, n);  // d b_j / dx
      for (int i = 0; i < n; ++i) dbj.col(i) = db[i].col(j);
      Mat dbj_m = Mat::Zero(n, n);
      for (int i = 0; i < n; ++i) dbj_m += ev.dM[i] * bj(i);
      const double r = norm2(dbj_m + 2.0 * sym(ev.M * dbj));
      rep.killing_residual[j] = std::max(rep.killing_residual[j], r);
      if (r > tolerance) bad = true;
    }

    if (bad && rep.violations.size() < kMaxViolationsKept) rep.violations.push_back(x);
  }

  rep.eigen_ok = rep.eigen_margin >= -kEigenRelTol;
  rep.contraction_ok = rep.contraction_max_eig <= tolerance;
  rep.killing_ok = std::all_of(rep.killing_residual.begin(), rep.killing_residual.end(),
                               [&](double r) { return r <= tolerance; });
  rep.pass = rep.eigen_ok && rep.contraction_ok && rep.killing_ok;
  return rep;
}

void validate_eigen_bounds(const MetricField& field, const SampleSpec& spec) {
  for (const Vec& x : sample_points(spec)) {
    const MetricEval ev = eval_metric(field, x);
    Eigen::SelfAdjointEigenSolver<Mat> eig(ev.M, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(field.dim() - 1);
    if (lo < field.alpha_lower() * (1.0 - kEigenRelTol) || hi > field.alpha_upper() * (1.0 + kEigenRelTol)) {
      std::ostringstream os;
      os << "metric eigenvalues [" << lo << ", " << hi << "] leave the claimed bounds ["
         << field.alpha_lower() << ", " << field.alpha_upper() << "] at x = " << format_state(x);
      throw MetricDomainError(os.str(), x);
    }
  }
}

}  // namespace safetube
