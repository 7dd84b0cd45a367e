#pragma once

#include <string>

#include "safetube/metric.hpp"
#include "safetube/models.hpp"

namespace safetube {

struct BuiltinExample {
  DynamicsModel model;
  MetricField metric;
  AssumptionBounds bounds;
  SafeSet safe_set;
  /// Region on which the published eigenvalue bounds of the metric hold.
  SafeSet metric_domain;
};

/// "ex1": three-state polynomial system with a state-dependent dual metric.
/// "ex2": two-state system with a constant dual metric.
/// Throws UsageError for any other id.
BuiltinExample builtin_example(const std::string& id);

DynamicsModel example1_model();
DynamicsModel example2_model();
PolyMatrix example1_dual_metric();
Mat example2_dual_metric();

}  // namespace safetube
