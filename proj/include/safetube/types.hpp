#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace safetube {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric part (R + R^T) / 2.
inline Mat sym(const Mat& r) { return 0.5 * (r + r.transpose()); }

/// Induced 2-norm (largest singular value).
inline double norm2(const Mat& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

/// Central-difference step used everywhere a closed-form derivative is missing.
inline double fd_step(const Vec& x) { return 1e-6 * (1.0 + x.norm()); }

/// Central-difference Jacobian of a vector field g: R^n -> R^k.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& g, const Vec& x) {
  const double h = fd_step(x);
  const Vec g0 = g(x);
  Mat jac(g0.size(), x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const Vec gp = g(xp);
    xp(i) = x(i) - h;
    const Vec gm = g(xp);
    xp(i) = x(i);
    jac.col(i) = (gp - gm) / (2.0 * h);
  }
  return jac;
}

/// Central-difference partials of a matrix field G: R^n -> R^{r x c}.
inline std::vector<Mat> fd_partials(const std::function<Mat(const Vec&)>& g, const Vec& x) {
  const double h = fd_step(x);
  std::vector<Mat> out;
  out.reserve(x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const Mat gp = g(xp);
    xp(i) = x(i) - h;
    const Mat gm = g(xp);
    xp(i) = x(i);
    out.push_back((gp - gm) / (2.0 * h));
  }
  return out;
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace safetube
