#include "vapvi/pessimistic_vi.hpp"

#include <algorithm>
#include <cmath>

namespace vapvi {

double bonus_vapvi(const RidgeFit<double>& lambda_fit, const Eigen::Ref<const Vector>& phi, double c, Index dim,
                   int horizon, Index episodes, bool higher_order) {
  const double root_d = std::sqrt(static_cast<double>(dim));
  double bonus = c * root_d * std::sqrt(quadratic_form(lambda_fit, phi));
  if (higher_order) {
    const double H = horizon;
    bonus += 2.0 * H * H * H * root_d / static_cast<double>(episodes);
  }
  return bonus;
}

Vector improved_residual(const RidgeFit<double>& lambda_fit, const Eigen::Ref<const Matrix>& sample_features,
                         const Eigen::Ref<const Vector>& targets, const Eigen::Ref<const Vector>& sigma_sq) {
  const Vector residual = targets - sample_features * lambda_fit.weights;
  const Vector weights = sigma_sq.cwiseInverse();
  const Matrix moment = weighted_moment<double>(sample_features, residual, weights);
  return lambda_fit.gram_inverse * moment.col(0);
}

double bonus_vapvi_improved(const Vector& residual, const Eigen::Ref<const Vector>& phi, int horizon, Index dim,
                            double kappa_hat, Index episodes, bool higher_order, double higher_order_constant) {
  if (phi.size() != residual.size()) throw std::invalid_argument("bonus_vapvi_improved: dimension mismatch");
  if ((phi.array() < 0.0).any()) throw std::invalid_argument("bonus_vapvi_improved: features must be nonnegative");
  double bonus = phi.dot(residual.cwiseAbs());
  if (higher_order) {
    const double H = horizon;
    bonus += higher_order_constant * H * H * H * static_cast<double>(dim) / (kappa_hat * static_cast<double>(episodes));
  }
  return bonus;
}

double bonus_pevi(const RidgeFit<double>& sigma_fit, const Eigen::Ref<const Vector>& phi, double beta) {
  return beta * std::sqrt(quadratic_form(sigma_fit, phi));
}

double empirical_coverage(const Eigen::Ref<const Matrix>& sample_features, double floor) {
  const Matrix cov = sample_features.transpose() * sample_features / static_cast<double>(sample_features.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  return std::max(floor, eig.eigenvalues()(0));
}

PolicySolution solve(const Dataset& data, const Dataset& variance_data, const FeatureMap& features,
                     const SolverOptions& options) {
  const int H = data.horizon();
  const Index S = features.num_states;
  const Index A = features.num_actions;
  const Index d = features.dim();
  const Index K = data.episodes();
  if (K < 1) throw std::invalid_argument("solve: empty dataset");
  if (variance_data.horizon() != H) throw std::invalid_argument("solve: D and D' horizons differ");
  if (!(options.lambda > 0.0)) throw std::invalid_argument("solve: lambda must be positive");
  const BonusSpec& bonus = options.bonus;
  if (bonus.c < 0.0 || bonus.beta.value_or(0.0) < 0.0) throw std::invalid_argument("solve: negative bonus constant");
  if (bonus.kind == BonusKind::kVapviImproved && (features.phi.array() < 0.0).any()) {
    throw std::invalid_argument("solve: the improved penalty requires nonnegative features");
  }
  const double beta = bonus.beta.value_or(bonus.c * static_cast<double>(d) * static_cast<double>(H));

  PolicySolution out;
  out.horizon = H;
  out.episodes = K;
  out.w_hat.resize(static_cast<std::size_t>(H));
  out.bonus.resize(static_cast<std::size_t>(H));
  out.q_bar.resize(static_cast<std::size_t>(H));
  out.q_hat.resize(static_cast<std::size_t>(H));
  out.sample_sigma_sq.resize(static_cast<std::size_t>(H));
  out.lambda_hat.resize(static_cast<std::size_t>(H));
  out.diagnostics.resize(static_cast<std::size_t>(H));
  out.v_hat = Matrix::Zero(H + 1, S);
  std::vector<std::vector<Index>> greedy(static_cast<std::size_t>(H), std::vector<Index>(S, 0));

  Matrix x(K, d);
  Vector y(K);
  Vector sigma2(K);
  for (int h = H; h >= 1; --h) {
    const auto idx = static_cast<std::size_t>(h - 1);
    const Vector v_next = out.v_hat.row(h).transpose();
    const auto slice = data.step(h);
    for (Index k = 0; k < K; ++k) {
      const Transition& t = slice[static_cast<std::size_t>(k)];
      if (t.state >= S || t.action >= A || t.next_state >= S) throw std::invalid_argument("solve: index out of range");
      x.row(k) = features.feature(t.state, t.action).transpose();
      y(k) = t.reward + v_next(t.next_state);
    }

    if (options.weighting == Weighting::kVariance) {
      const VarianceModel model = fit_variance(variance_data, h, v_next, options.lambda, features,
                                               VarianceOptions{options.variance_offset, options.check_range});
      for (Index k = 0; k < K; ++k) sigma2(k) = sigma_sq(model, x.row(k).transpose());
    } else {
      sigma2.setOnes();
    }
    const Vector weights = sigma2.cwiseInverse();
    const RidgeFit<double> fit = ridge<double>(x, y, weights, options.lambda);

    std::optional<RidgeFit<double>> unit_fit;
    if (bonus.kind == BonusKind::kPevi) {
      if (options.weighting == Weighting::kUnit) {
        unit_fit = fit;
      } else {
        unit_fit = ridge<double>(x, y, options.lambda);
      }
    }
    Vector residual;
    double kappa_hat = 0.0;
    if (bonus.kind == BonusKind::kVapviImproved) {
      residual = improved_residual(fit, x, y, sigma2);
      kappa_hat = empirical_coverage(x, options.kappa_floor);
    }

    const double cap = static_cast<double>(H - h + 1);
    Matrix gamma = Matrix::Zero(S, A);
    Matrix q_bar(S, A);
    Matrix q_hat(S, A);
    StepDiagnostics diag;
    for (Index s = 0; s < S; ++s) {
      for (Index a = 0; a < A; ++a) {
        const Vector phi = features.feature(s, a);
        switch (bonus.kind) {
          case BonusKind::kNone:
            break;
          case BonusKind::kVapvi:
            gamma(s, a) = bonus_vapvi(fit, phi, bonus.c, d, H, K, bonus.higher_order);
            break;
          case BonusKind::kVapviImproved:
            gamma(s, a) = bonus_vapvi_improved(residual, phi, H, d, kappa_hat, K, bonus.higher_order,
                                               bonus.higher_order_constant);
            break;
          case BonusKind::kPevi:
            gamma(s, a) = bonus_pevi(*unit_fit, phi, beta);
            break;
        }
        q_bar(s, a) = phi.dot(fit.weights) - gamma(s, a);
        if (q_bar(s, a) < 0.0) ++diag.clipped_low;
        if (q_bar(s, a) > cap) ++diag.clipped_high;
        q_hat(s, a) = std::max(0.0, std::min(q_bar(s, a), cap));
      }
      Index best = 0;
      for (Index a = 1; a < A; ++a) {
        if (q_hat(s, a) > q_hat(s, best)) best = a;
      }
      greedy[idx][static_cast<std::size_t>(s)] = best;
      out.v_hat(h - 1, s) = q_hat(s, best);
    }

    diag.gram_condition = fit.condition_number();
    diag.uncovered_directions = fit.uncovered_directions();
    diag.kappa_hat = kappa_hat;
    out.diagnostics[idx] = diag;
    out.w_hat[idx] = fit.weights;
    out.lambda_hat[idx] = fit.gram;
    out.bonus[idx] = std::move(gamma);
    out.q_bar[idx] = std::move(q_bar);
    out.q_hat[idx] = std::move(q_hat);
    out.sample_sigma_sq[idx] = sigma2;
  }
  out.policy = PolicyTable::deterministic(greedy, A);
  return out;
}

double suboptimality(const LinearMDP& mdp, const PolicyTable& policy, double v_star) {
  return v_star - policy_value(mdp, policy).value;
}

double suboptimality(const LinearMDP& mdp, const PolicySolution& solution) {
  return suboptimality(mdp, solution.policy, exact_value_iteration(mdp).v_star);
}

std::string to_string(BonusKind kind) {
  switch (kind) {
    case BonusKind::kNone: return "none";
    case BonusKind::kVapvi: return "vapvi";
    case BonusKind::kVapviImproved: return "vapvi_improved";
    case BonusKind::kPevi: return "pevi";
  }
  return "unknown";
}

std::string to_string(Weighting weighting) { return weighting == Weighting::kUnit ? "unit" : "variance"; }

}  // namespace vapvi
