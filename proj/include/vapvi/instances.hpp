#pragma once

#include "vapvi/linear_mdp.hpp"

#include <cstdint>
#include <vector>

namespace vapvi {

/// Two-state, 100-action simulation MDP with binary-encoded action features.
struct SyntheticConfig {
  int horizon = 20;
  double r = 0.9;
  /// Behavior probability of action 0.
  double p = 0.6;
  /// Bits alpha_1..alpha_H; empty means alpha_h = h mod 2.
  std::vector<int> alpha;
  double reward_noise_std = 0.0;
};

inline constexpr Index kSyntheticActions = 100;
inline constexpr Index kSyntheticBits = 8;
inline constexpr Index kSyntheticDim = kSyntheticBits + 2;

struct SyntheticInstance {
  LinearMDP mdp;
  PolicyTable behavior;
  std::vector<int> alpha;
};

/// delta(s, a) = 1 iff 1{s = 0} == 1{a = 0}.
int synthetic_delta(Index s, Index a);
/// LSB-first 8-bit encoding of `a`, then delta, then 1 - delta.
Vector synthetic_feature(Index s, Index a);
std::vector<int> default_alpha(int horizon);

SyntheticInstance build_synthetic(const SyntheticConfig& config);

/// Minimax lower-bound family: states {+1, -1}, actions are vectors in
/// {-1, 0, +1}^(d-2), rewards Gaussian around s / sqrt(6) + delta <a, u_h> / sqrt(2d).
struct HardInstanceConfig {
  int d = 5;
  int horizon = 3;
  double delta = 0.0;
  /// H rows of d - 2 entries, each -1 or +1.
  std::vector<std::vector<int>> u;
  double reward_noise_std = 1.0;
  /// Materialize all 3^(d-2) actions (allowed for d - 2 <= 8).
  bool full_action_set = false;
};

inline constexpr int kMaxSignCoordinates = 12;
inline constexpr int kMaxFullCoordinates = 8;

struct HardInstance {
  LinearMDP mdp;
  PolicyTable behavior;
  PolicyTable optimal;
  /// Action vector a in R^(d-2) for each materialized action index.
  std::vector<Vector> action_vectors;
  HardInstanceConfig config;
};

HardInstance build_hard(const HardInstanceConfig& config);

/// Index of action vector `a` in the instance, or -1.
Index find_action(const HardInstance& instance, const Vector& a);

/// (delta / sqrt(2d)) sum_h |u_h - E_pi[a_h]|_1 using exact occupancies.
double hard_suboptimality_closed_form(const HardInstance& instance, const PolicyTable& policy);

/// H x (d - 2) sign matrix drawn from `seed`.
std::vector<std::vector<int>> random_signs(int horizon, int coordinates, std::uint64_t seed);

/// Random finite MDP with one-hot (tabular) features phi(s, a) = e_{s, a}.
struct TabularConfig {
  Index states = 2;
  Index actions = 2;
  int horizon = 2;
  std::uint64_t seed = 0;
  double reward_noise_std = 0.0;
};

struct TabularInstance {
  LinearMDP mdp;
  PolicyTable behavior;  // uniform
};

TabularInstance build_tabular(const TabularConfig& config);

}  // namespace vapvi
