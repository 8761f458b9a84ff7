#pragma once

#include "vapvi/dataset.hpp"
#include "vapvi/linear_mdp.hpp"
#include "vapvi/ridge.hpp"
#include "vapvi/variance.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vapvi {

enum class BonusKind { kNone, kVapvi, kVapviImproved, kPevi };
enum class Weighting { kUnit, kVariance };

struct BonusSpec {
  BonusKind kind = BonusKind::kNone;
  /// Multiplier C of the main term.
  double c = 1.0;
  /// Adds 2 H^3 sqrt(d) / K (vapvi) or c_ho H^3 d / (kappa K) (vapvi_improved).
  bool higher_order = true;
  /// PEVI multiplier; defaults to c * d * H when unset.
  std::optional<double> beta;
  /// Constant c_ho of the improved penalty's higher-order term.
  double higher_order_constant = 2.0;
};

struct SolverOptions {
  double lambda = 0.01;
  BonusSpec bonus;
  Weighting weighting = Weighting::kUnit;
  int variance_offset = 0;
  /// Lower bound on the empirical coverage eigenvalue used by vapvi_improved.
  double kappa_floor = 1e-6;
  /// Range checks on V_{h+1} in the variance fit.
  bool check_range = true;
};

struct StepDiagnostics {
  double gram_condition = 0.0;
  Index uncovered_directions = 0;  // Gram eigenvalues (without lambda) below 1e-8
  Index clipped_low = 0;           // (s, a) with Qbar < 0
  Index clipped_high = 0;          // (s, a) with Qbar > H - h + 1
  double kappa_hat = 0.0;          // only for vapvi_improved
};

/// Output of one backward pass. Per-step vectors are indexed by h - 1.
struct PolicySolution {
  int horizon = 0;
  Index episodes = 0;
  std::vector<Vector> w_hat;
  std::vector<Matrix> bonus;   // S x A
  std::vector<Matrix> q_bar;   // S x A, before truncation
  std::vector<Matrix> q_hat;   // S x A, in [0, H - h + 1]
  Matrix v_hat;                // (H + 1) x S, last row zero
  std::vector<Vector> sample_sigma_sq;  // sigma^2 of each step-h sample of D
  std::vector<Matrix> lambda_hat;       // weighted Gram matrix per step
  PolicyTable policy;
  std::vector<StepDiagnostics> diagnostics;
};

/// Backward induction with optional variance weighting and a pessimism
/// penalty. `data` is D, `variance_data` is D' (may alias `data`).
PolicySolution solve(const Dataset& data, const Dataset& variance_data, const FeatureMap& features,
                     const SolverOptions& options);

/// C sqrt(d) sqrt(phi^T Lambda^{-1} phi) + [2 H^3 sqrt(d) / K].
double bonus_vapvi(const RidgeFit<double>& lambda_fit, const Eigen::Ref<const Vector>& phi, double c, Index dim,
                   int horizon, Index episodes, bool higher_order);

/// Lambda^{-1} sum_k phi_k (y_k - <phi_k, w>) / sigma_k^2, the weighted residual
/// direction whose absolute value defines the improved penalty.
Vector improved_residual(const RidgeFit<double>& lambda_fit, const Eigen::Ref<const Matrix>& sample_features,
                         const Eigen::Ref<const Vector>& targets, const Eigen::Ref<const Vector>& sigma_sq);

/// <phi, |rho|> + [c_ho H^3 d / (kappa K)]. Throws on negative feature entries.
double bonus_vapvi_improved(const Vector& residual, const Eigen::Ref<const Vector>& phi, int horizon, Index dim,
                            double kappa_hat, Index episodes, bool higher_order, double higher_order_constant);

/// beta sqrt(phi^T Sigma^{-1} phi) with the unit-weight Gram Sigma.
double bonus_pevi(const RidgeFit<double>& sigma_fit, const Eigen::Ref<const Vector>& phi, double beta);

/// Smallest eigenvalue of (1 / n) sum phi phi^T, floored.
double empirical_coverage(const Eigen::Ref<const Matrix>& sample_features, double floor);

/// v* - v^{pi_hat} by exact dynamic programming.
double suboptimality(const LinearMDP& mdp, const PolicySolution& solution);
double suboptimality(const LinearMDP& mdp, const PolicyTable& policy, double v_star);

std::string to_string(BonusKind kind);
std::string to_string(Weighting weighting);

}  // namespace vapvi
