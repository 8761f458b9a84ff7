#pragma once

#include "vapvi/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vapvi {

/// Known feature map of a finite linear MDP. Row `s * A + a` of `phi` is
/// phi(s, a). This is everything a learner is allowed to see of the model.
struct FeatureMap {
  Index num_states = 0;
  Index num_actions = 0;
  Matrix phi;

  Index dim() const { return phi.cols(); }
  Index row_index(Index s, Index a) const { return s * num_actions + a; }
  auto feature(Index s, Index a) const { return phi.row(row_index(s, a)).transpose(); }
};

/// Raw parameters of a finite episodic linear MDP. Steps are 1-based in the
/// public API; `nu[h - 1]` and `theta.row(h - 1)` belong to step h.
struct LinearMDPSpec {
  int horizon = 0;
  std::vector<std::string> states;
  std::vector<std::string> actions;
  Matrix phi;               // (S * A) x d
  std::vector<Matrix> nu;   // H entries, each S x d
  Matrix theta;             // H x d
  Vector initial_dist;      // S
  double reward_noise_std = 0.0;
  /// Disables the r in [0, 1] and V in [0, H] range checks. Arithmetic is unchanged.
  bool range_exempt = false;
  /// Disables the |phi(s, a)| <= 1 check.
  bool feature_norm_exempt = false;
};

/// Validated, immutable linear MDP with cached transition and reward tables.
class LinearMDP {
 public:
  /// Throws ModelError when the spec does not describe a valid linear MDP.
  explicit LinearMDP(LinearMDPSpec spec);

  const LinearMDPSpec& spec() const { return spec_; }
  int horizon() const { return spec_.horizon; }
  Index num_states() const { return static_cast<Index>(spec_.states.size()); }
  Index num_actions() const { return static_cast<Index>(spec_.actions.size()); }
  Index feature_dim() const { return spec_.phi.cols(); }
  bool range_exempt() const { return spec_.range_exempt; }
  double reward_noise_std() const { return spec_.reward_noise_std; }
  const Vector& initial_dist() const { return spec_.initial_dist; }
  const FeatureMap& features() const { return features_; }

  /// (S * A) x S table of P_h(s' | s, a), clamped into [0, 1].
  const Matrix& transitions(int step) const { return transitions_[checked_step(step)]; }
  /// S x A table of mean rewards <phi(s, a), theta_h>.
  const Matrix& rewards(int step) const { return rewards_[checked_step(step)]; }

  double mean_reward(int step, Index s, Index a) const { return rewards(step)(s, a); }

 private:
  std::size_t checked_step(int step) const;

  LinearMDPSpec spec_;
  FeatureMap features_;
  std::vector<Matrix> transitions_;
  std::vector<Matrix> rewards_;
};

/// Per-step action distributions. `probs[h - 1]` is an S x A row-stochastic matrix.
class PolicyTable {
 public:
  PolicyTable() = default;

  static PolicyTable deterministic(const std::vector<std::vector<Index>>& actions, Index num_actions);
  static PolicyTable stochastic(std::vector<Matrix> probs);
  /// Same distribution at every step and state.
  static PolicyTable stationary(int horizon, Index num_states, const Vector& action_probs);
  static PolicyTable uniform(int horizon, Index num_states, Index num_actions);

  int horizon() const { return static_cast<int>(probs_.size()); }
  Index num_states() const { return probs_.empty() ? 0 : probs_.front().rows(); }
  Index num_actions() const { return probs_.empty() ? 0 : probs_.front().cols(); }
  const Matrix& step(int h) const { return probs_.at(static_cast<std::size_t>(h - 1)); }
  double prob(int h, Index s, Index a) const { return step(h)(s, a); }

  bool is_deterministic() const;
  /// Action with the largest probability (lowest index on ties).
  Index action(int h, Index s) const;

  /// Throws ModelError when shapes disagree with the MDP or rows do not sum to one.
  void check_against(const LinearMDP& mdp) const;

 private:
  explicit PolicyTable(std::vector<Matrix> probs) : probs_(std::move(probs)) {}
  std::vector<Matrix> probs_;
};

struct ExactValues {
  std::vector<Matrix> q;  // H entries, each S x A
  Matrix v;               // (H + 1) x S, row h - 1 is V_h, last row is zero
  double v_star = 0.0;
  PolicyTable greedy;     // argmax with lowest-index tie-break
};

struct PolicyValue {
  Matrix v;  // (H + 1) x S
  double value = 0.0;
};

/// P_h(s' | s, a) for one entry.
double transition_prob(const LinearMDP& mdp, int step, Index s, Index a, Index next_state);

/// Backward Bellman optimality recursion.
ExactValues exact_value_iteration(const LinearMDP& mdp);

/// Exact backward evaluation of a (possibly stochastic) policy.
PolicyValue policy_value(const LinearMDP& mdp, const PolicyTable& policy);

/// State-action occupancy d^pi_h as an S x A matrix (forward recursion).
Matrix occupancy(const LinearMDP& mdp, const PolicyTable& policy, int step);

/// (T_h V)(s, a) = r_h(s, a) + (P_h V)(s, a) as an S x A matrix.
Matrix bellman_image(const LinearMDP& mdp, int step, const Vector& v_next);

/// Var_{P_h}(V)(s, a) as an S x A matrix, clamped at zero.
Matrix conditional_variance(const LinearMDP& mdp, int step, const Vector& v_next);

struct CovarianceReport {
  Matrix sigma;
  double min_eigenvalue = 0.0;
};

/// Sigma^p_h = E_{mu, h}[phi phi^T] with its smallest eigenvalue kappa_h.
CovarianceReport population_covariance(const LinearMDP& mdp, const PolicyTable& behavior, int step);

/// kappa = min_h kappa_h.
double min_coverage_eigenvalue(const LinearMDP& mdp, const PolicyTable& behavior);

/// Instance JSON with 17 significant digits per float.
std::string to_json(const LinearMDP& mdp);
LinearMDP linear_mdp_from_json(const std::string& text);
LinearMDP load_linear_mdp(const std::string& path);
void save_linear_mdp(const LinearMDP& mdp, const std::string& path);

/// FNV-1a of the JSON serialization.
std::uint64_t instance_hash(const LinearMDP& mdp);
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace vapvi
