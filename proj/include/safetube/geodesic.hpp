#pragma once

#include <optional>
#include <vector>

#include "safetube/metric.hpp"

namespace safetube {

struct GeodesicOptions {
  int segments = 8;  ///< N >= 4
  int max_iterations = 50;
  double gradient_tol = 1e-8;  ///< converged when |grad| <= tol (1 + E)
};

/// Discretized curve gamma: [0,1] -> R^n with nodes at s_i = i / N.
struct GeodesicCurve {
  Vec s;
  std::vector<Vec> nodes;
  std::vector<Vec> velocities;  ///< d gamma / ds at the nodes
  double energy = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = true;
  /// Iteration cap reached before the gradient tolerance.
  bool degraded = false;
  /// Energy above alpha_upper |p - q|^2 (non-minimizing stationary curve suspected).
  bool exceeds_upper_bound = false;

  const Vec& start() const { return nodes.front(); }
  const Vec& end() const { return nodes.back(); }
  /// sqrt(v_i^T M(gamma_i) v_i) at each node.
  std::vector<double> metric_speeds(const MetricField& field) const;
};

/// Three-point Gauss rule on each segment of the cubic spline through the nodes. Rows map nodal
/// values to curve positions and velocities at the quadrature points.
struct SplineQuadrature {
  Mat positions;
  Mat velocities;
  Vec weights;
};

SplineQuadrature spline_quadrature(int segments);

/// Holds the discretization matrices and scratch buffers. Not thread-safe; use one per thread.
class GeodesicSolver {
 public:
  explicit GeodesicSolver(MetricField field, GeodesicOptions options = {});

  GeodesicCurve solve(const Vec& p, const Vec& q, const GeodesicCurve* warm = nullptr);

  const MetricField& field() const { return field_; }
  const GeodesicOptions& options() const { return options_; }
  /// Spline differentiation matrix (N+1 x N+1).
  const Mat& differentiation() const { return D_; }

  /// Discrete energy of an arbitrary nodal curve (rows are nodes).
  double energy_of(const Mat& nodes) const;

 private:
  struct Eval {
    double energy = 0.0;
    Vec grad;  ///< interior gradient, stacked
    Mat hess;  ///< interior Gauss-Newton Hessian
  };

  Eval evaluate(const Mat& g, bool with_hessian) const;
  GeodesicCurve finish(const Mat& g, int iterations, double grad_norm, bool converged) const;

  MetricField field_;
  GeodesicOptions options_;
  Mat D_;
  SplineQuadrature quad_;
};

/// One-shot convenience wrapper around GeodesicSolver.
GeodesicCurve solve_geodesic(const MetricField& field, const Vec& p, const Vec& q,
                             const GeodesicCurve* warm = nullptr, GeodesicOptions options = {});

double energy(const GeodesicCurve& curve);

enum class CurveEnd { Start, End };
Vec endpoint_velocity(const GeodesicCurve& curve, CurveEnd end);

/// Not-a-knot cubic spline differentiation matrix on N+1 uniform nodes of [0,1].
Mat spline_differentiation_matrix(int segments);


}  // namespace safetube
