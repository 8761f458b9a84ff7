#pragma once

#include "vapvi/dataset.hpp"
#include "vapvi/linear_mdp.hpp"

namespace vapvi {

struct VarianceOptions {
  /// 0 gives sigma^2 = max{1, Var}; 1 gives max{1, Var} + 1.
  int offset = 0;
  /// Reject V_next outside [0, H - h]. Off for range-exempt instances.
  bool check_range = true;
};

/// Second- and first-moment regressions of V_{h+1} at one step, plus the
/// clipped variance evaluator built from them.
struct VarianceModel {
  Vector beta_bar;   // estimates P_h V^2 = <phi, beta>
  Vector theta_bar;  // estimates P_h V   = <phi, theta>
  int horizon = 0;
  int step = 0;
  int offset = 0;

  /// Upper clip of the first-moment read, H - h + 1.
  double range() const { return static_cast<double>(horizon - step + 1); }
};

/// Fits both moment regressions over the step-h slice of `data` with one
/// shared Gram factorization.
VarianceModel fit_variance(const Dataset& data, int step, const Vector& v_next, double lambda,
                           const FeatureMap& features, VarianceOptions options = {});

/// clip(<phi, beta>, 0, R^2) - clip(<phi, theta>, 0, R)^2 with R = H - h + 1.
double variance_estimate(const VarianceModel& model, const Eigen::Ref<const Vector>& phi);

/// max{1, variance_estimate} + offset.
double sigma_sq(const VarianceModel& model, const Eigen::Ref<const Vector>& phi);

/// Combines raw moment reads exactly as `variance_estimate` does.
double clipped_variance(double second_moment, double first_moment, double range);

}  // namespace vapvi
