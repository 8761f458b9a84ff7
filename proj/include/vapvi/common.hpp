#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace vapvi {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance used when validating probabilities and rewards of a model.
inline constexpr double kModelTolerance = 1e-10;

/// A LinearMDP (or policy) failed validation.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear system could not be solved to the required accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration or input file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double value);

}  // namespace vapvi
