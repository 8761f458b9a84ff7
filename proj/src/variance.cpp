#include "vapvi/variance.hpp"
#include "vapvi/ridge.hpp"

#include <algorithm>

namespace vapvi {

VarianceModel fit_variance(const Dataset& data, int step, const Vector& v_next, double lambda,
                           const FeatureMap& features, VarianceOptions options) {
  const auto slice = data.step(step);
  if (slice.empty()) throw std::invalid_argument("fit_variance: empty step slice");
  if (v_next.size() != features.num_states) throw std::invalid_argument("fit_variance: V_next must have S entries");
  if (options.offset != 0 && options.offset != 1) throw std::invalid_argument("fit_variance: offset must be 0 or 1");
  const int horizon = data.horizon();
  if (options.check_range) {
    const double hi = static_cast<double>(horizon - step) + kModelTolerance;
    if (v_next.minCoeff() < -kModelTolerance || v_next.maxCoeff() > hi) {
      throw std::invalid_argument("fit_variance: V_next outside [0, H - h]");
    }
  }

  const auto n = static_cast<Index>(slice.size());
  Matrix x(n, features.dim());
  Matrix y(n, 2);
  for (Index k = 0; k < n; ++k) {
    const Transition& t = slice[static_cast<std::size_t>(k)];
    x.row(k) = features.feature(t.state, t.action);
    const double v = v_next(t.next_state);
    y(k, 0) = v * v;
    y(k, 1) = v;
  }
  const Vector ones = Vector::Ones(n);
  const auto system = RidgeSystem<double>::build(x, ones, lambda);
  const Matrix coef = system.solve(weighted_moment<double>(x, y, ones));
  return VarianceModel{coef.col(0), coef.col(1), horizon, step, options.offset};
}

double clipped_variance(double second_moment, double first_moment, double range) {
  const double second = std::clamp(second_moment, 0.0, range * range);
  const double first = std::clamp(first_moment, 0.0, range);
  return second - first * first;
}

double variance_estimate(const VarianceModel& model, const Eigen::Ref<const Vector>& phi) {
  if (phi.size() != model.beta_bar.size()) throw std::invalid_argument("variance_estimate: dimension mismatch");
  return clipped_variance(phi.dot(model.beta_bar), phi.dot(model.theta_bar), model.range());
}

double sigma_sq(const VarianceModel& model, const Eigen::Ref<const Vector>& phi) {
  return std::max(1.0, variance_estimate(model, phi)) + static_cast<double>(model.offset);
}

}  // namespace vapvi
