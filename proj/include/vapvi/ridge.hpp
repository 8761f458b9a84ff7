#pragma once

#include "vapvi/common.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vapvi {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Eigenvalues below this are reported as uncovered feature directions.
inline constexpr double kSmallEigenvalue = 1e-8;

namespace detail {

// Neumaier's variant of Kahan summation, one compensation term per entry.
template <typename Scalar>
inline void compensated_add(Scalar& sum, Scalar& carry, Scalar x) {
  const Scalar t = sum + x;
  if (std::abs(sum) >= std::abs(x)) {
    carry += (sum - t) + x;
  } else {
    carry += (x - t) + sum;
  }
  sum = t;
}

template <typename Scalar>
void check_weights(const VectorX<Scalar>& weights, Index n) {
  if (weights.size() != n) throw std::invalid_argument("ridge: weight count does not match sample count");
  for (Index k = 0; k < n; ++k) {
    if (!(weights(k) > Scalar(0)) || !std::isfinite(static_cast<double>(weights(k)))) {
      throw std::invalid_argument("ridge: weights must be positive and finite");
    }
  }
}

}  // namespace detail

/// sum_k w_k x_k x_k^T + lambda I, accumulated in sample order with
/// compensated summation. `features` has one sample per row.
template <typename Scalar>
MatrixX<Scalar> weighted_gram(const Eigen::Ref<const MatrixX<Scalar>>& features,
                              const VectorX<Scalar>& weights, Scalar lambda) {
  const Index n = features.rows();
  const Index d = features.cols();
  detail::check_weights(weights, n);
  MatrixX<Scalar> sum = MatrixX<Scalar>::Zero(d, d);
  MatrixX<Scalar> carry = MatrixX<Scalar>::Zero(d, d);
  for (Index k = 0; k < n; ++k) {
    for (Index j = 0; j < d; ++j) {
      const Scalar wx = weights(k) * features(k, j);
      if (wx == Scalar(0)) continue;
      for (Index i = j; i < d; ++i) detail::compensated_add(sum(i, j), carry(i, j), wx * features(k, i));
    }
  }
  MatrixX<Scalar> gram = sum + carry;
  gram.diagonal().array() += lambda;
  gram.template triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  return gram;
}

/// sum_k w_k x_k y_k^T for a matrix of targets (one column per regression).
template <typename Scalar>
MatrixX<Scalar> weighted_moment(const Eigen::Ref<const MatrixX<Scalar>>& features,
                                const Eigen::Ref<const MatrixX<Scalar>>& targets, const VectorX<Scalar>& weights) {
  const Index n = features.rows();
  if (targets.rows() != n) throw std::invalid_argument("ridge: target count does not match sample count");
  detail::check_weights(weights, n);
  MatrixX<Scalar> sum = MatrixX<Scalar>::Zero(features.cols(), targets.cols());
  MatrixX<Scalar> carry = MatrixX<Scalar>::Zero(features.cols(), targets.cols());
  for (Index k = 0; k < n; ++k) {
    for (Index m = 0; m < targets.cols(); ++m) {
      const Scalar wy = weights(k) * targets(k, m);
      for (Index i = 0; i < features.cols(); ++i) detail::compensated_add(sum(i, m), carry(i, m), wy * features(k, i));
    }
  }
  return sum + carry;
}

/// Factorized regularized Gram matrix. Several right-hand sides can share it.
template <typename Scalar>
class RidgeSystem {
 public:
  RidgeSystem(MatrixX<Scalar> gram, Scalar lambda, Index sample_count)
      : gram_(std::move(gram)), lambda_(lambda), sample_count_(sample_count) {
    if (!(lambda > Scalar(0))) throw std::invalid_argument("ridge: lambda must be positive");
    if (gram_.rows() != gram_.cols()) throw std::invalid_argument("ridge: Gram matrix must be square");
    llt_.compute(gram_);
    if (llt_.info() != Eigen::Success) throw NumericalError("ridge: Cholesky factorization failed");
    inverse_ = llt_.solve(MatrixX<Scalar>::Identity(gram_.rows(), gram_.cols()));
    inverse_ = (inverse_ + inverse_.transpose()).eval() * Scalar(0.5);
  }

  static RidgeSystem build(const Eigen::Ref<const MatrixX<Scalar>>& features, const VectorX<Scalar>& weights,
                           Scalar lambda) {
    if (!(lambda > Scalar(0))) throw std::invalid_argument("ridge: lambda must be positive");
    return RidgeSystem(weighted_gram<Scalar>(features, weights, lambda), lambda, features.rows());
  }

  /// Solves G x = rhs; one refinement step if the relative residual exceeds 1e-8.
  MatrixX<Scalar> solve(const Eigen::Ref<const MatrixX<Scalar>>& rhs) const {
    if (rhs.rows() != gram_.rows()) throw std::invalid_argument("ridge: right-hand side has wrong dimension");
    MatrixX<Scalar> x = llt_.solve(rhs);
    if (relative_residual(x, rhs) > Scalar(1e-8)) {
      x += llt_.solve(rhs - gram_ * x);
      if (relative_residual(x, rhs) > Scalar(1e-8)) {
        throw NumericalError("ridge: normal-equations residual above 1e-8");
      }
    }
    return x;
  }

  Scalar relative_residual(const MatrixX<Scalar>& x, const Eigen::Ref<const MatrixX<Scalar>>& rhs) const {
    return (gram_ * x - rhs).norm() / std::max(Scalar(1), rhs.norm());
  }

  const MatrixX<Scalar>& gram() const { return gram_; }
  const MatrixX<Scalar>& gram_inverse() const { return inverse_; }
  Scalar lambda() const { return lambda_; }
  Index sample_count() const { return sample_count_; }

 private:
  MatrixX<Scalar> gram_;
  MatrixX<Scalar> inverse_;
  Eigen::LLT<MatrixX<Scalar>> llt_;
  Scalar lambda_;
  Index sample_count_;
};

/// Closed-form (weighted) ridge regression result.
template <typename Scalar>
struct RidgeFit {
  VectorX<Scalar> weights;
  MatrixX<Scalar> gram;
  MatrixX<Scalar> gram_inverse;
  Scalar lambda{};
  Index sample_count = 0;

  Index dim() const { return weights.size(); }

  /// Eigenvalues of the data part G - lambda I below `threshold`.
  Index uncovered_directions(Scalar threshold = Scalar(kSmallEigenvalue)) const {
    MatrixX<Scalar> data = gram;
    data.diagonal().array() -= lambda;
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(data, Eigen::EigenvaluesOnly);
    return (eig.eigenvalues().array() < threshold).count();
  }

  Scalar condition_number() const {
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(gram, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
  }
};

template <typename Scalar>
RidgeFit<Scalar> make_fit(const RidgeSystem<Scalar>& system, const Eigen::Ref<const MatrixX<Scalar>>& rhs) {
  return RidgeFit<Scalar>{system.solve(rhs).col(0), system.gram(), system.gram_inverse(), system.lambda(),
                          system.sample_count()};
}

/// argmin_w lambda |w|^2 + sum_k w_k (<x_k, w> - y_k)^2, i.e.
/// (sum_k w_k x_k x_k^T + lambda I)^{-1} sum_k w_k x_k y_k.
template <typename Scalar>
RidgeFit<Scalar> ridge(const Eigen::Ref<const MatrixX<Scalar>>& features, const VectorX<Scalar>& targets,
                       const VectorX<Scalar>& weights, Scalar lambda) {
  if (targets.size() != features.rows()) throw std::invalid_argument("ridge: target count does not match sample count");
  const auto system = RidgeSystem<Scalar>::build(features, weights, lambda);
  return make_fit<Scalar>(system, weighted_moment<Scalar>(features, targets, weights));
}

/// Unit-weight ridge; identical arithmetic to `ridge` with all weights one.
template <typename Scalar>
RidgeFit<Scalar> ridge(const Eigen::Ref<const MatrixX<Scalar>>& features, const VectorX<Scalar>& targets,
                       Scalar lambda) {
  return ridge<Scalar>(features, targets, VectorX<Scalar>::Ones(features.rows()), lambda);
}

/// x^T G^{-1} x, clamped at zero.
template <typename Scalar, typename Derived>
Scalar quadratic_form(const MatrixX<Scalar>& gram_inverse, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != gram_inverse.rows()) throw std::invalid_argument("quadratic_form: dimension mismatch");
  const VectorX<Scalar> v = x.derived().template cast<Scalar>().reshaped();
  return std::max(Scalar(0), v.dot(gram_inverse * v));
}

template <typename Scalar, typename Derived>
Scalar quadratic_form(const RidgeFit<Scalar>& fit, const Eigen::MatrixBase<Derived>& x) {
  return quadratic_form<Scalar>(fit.gram_inverse, x);
}

}  // namespace vapvi
