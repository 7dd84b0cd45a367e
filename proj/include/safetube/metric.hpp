#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "safetube/models.hpp"
#include "safetube/polynomial.hpp"
#include "safetube/types.hpp"

namespace safetube {

/// Control contraction metric, specified through its dual W(x) = M(x)^{-1}.
///
/// M is obtained by pointwise inversion of W and its partials from
/// dM/dx_i = -M (dW/dx_i) M. `alpha_lower`/`alpha_upper` are the claimed
/// uniform eigenvalue bounds of M, and `lambda` the contraction rate.
class MetricField {
 public:
  using MatFn = std::function<Mat(const Vec&)>;
  using PartialsFn = std::function<std::vector<Mat>(const Vec&)>;

  MetricField(int n, MatFn dual, PartialsFn dual_partials, double lambda, double alpha_lower,
              double alpha_upper);

  static MetricField from_polynomial(const PolyMatrix& dual, double lambda, double alpha_lower,
                                     double alpha_upper);
  static MetricField constant(const Mat& dual, double lambda, double alpha_lower, double alpha_upper);

  int dim() const { return n_; }
  double lambda() const { return lambda_; }
  double alpha_lower() const { return alpha_lower_; }
  double alpha_upper() const { return alpha_upper_; }
  bool is_constant() const { return constant_; }
  /// Polynomial table the field was built from, if any.
  const std::optional<PolyMatrix>& polynomial() const { return poly_; }

  MetricField with_lambda(double lambda) const;

  Mat dual(const Vec& x) const { return dual_(x); }
  std::vector<Mat> dual_partials(const Vec& x) const { return dual_partials_(x); }

 private:
  int n_;
  MatFn dual_;
  PartialsFn dual_partials_;
  double lambda_;
  double alpha_lower_;
  double alpha_upper_;
  bool constant_ = false;
  std::optional<PolyMatrix> poly_;
};

struct MetricEval {
  Mat M;
  Mat W;
  std::vector<Mat> dM;
};

/// M, W and dM/dx_i at x. Throws MetricDomainError when W(x) is not positive definite.
MetricEval eval_metric(const MetricField& field, const Vec& x);

struct MetricFactors {
  Mat theta;  ///< theta^T theta = M
  Mat L;      ///< L^T L = W
};

MetricFactors factorize(const MetricField& field, const Vec& x);

/// F(x) = -d_f W + 2 Sym(df/dx W) + 2 lambda W.
Mat dual_F(const DynamicsModel& model, const MetricField& field, const Vec& x);

/// Where and how densely to sample a region.
struct SampleSpec {
  SafeSet region = SafeSet::linf_ball(1, 1.0);
  int count = 10000;
  std::uint64_t seed = 0;
  /// Points per axis of an additional tensor grid (0 disables the grid; boxes only).
  int grid_per_dim = 0;
};

std::vector<Vec> sample_points(const SampleSpec& spec);

struct CcmCheckReport {
  int samples = 0;
  double tolerance = 1e-8;
  double eig_min = 0.0;  ///< smallest eigenvalue of M seen
  double eig_max = 0.0;  ///< largest eigenvalue of M seen
  /// min over samples of min(eig_min/alpha_lower - 1, 1 - eig_max/alpha_upper); >= 0 is good.
  double eigen_margin = 0.0;
  /// max over samples of the largest eigenvalue of the contraction matrix restricted to
  /// null(B^T M); <= 0 is good.
  double contraction_max_eig = 0.0;
  /// Per input column, max over samples of |d_{b_j} M + 2 Sym(M db_j/dx)|; 0 is good.
  std::vector<double> killing_residual;
  std::vector<Vec> violations;
  bool eigen_ok = false;
  bool contraction_ok = false;
  bool killing_ok = false;
  bool pass = false;
};

/// Numerically checks the three CCM conditions on sampled states.
CcmCheckReport ccm_check(const DynamicsModel& model, const MetricField& field, const SampleSpec& spec,
                         double tolerance = 1e-8);

/// Throws MetricDomainError if sampled eigenvalues of M leave
/// [alpha_lower (1 - 1e-9), alpha_upper (1 + 1e-9)].
void validate_eigen_bounds(const MetricField& field, const SampleSpec& spec);

}  // namespace safetube
