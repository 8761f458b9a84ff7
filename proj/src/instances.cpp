#include "vapvi/instances.hpp"
#include "vapvi/rng.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace vapvi {

int synthetic_delta(Index s, Index a) { return (s == 0) == (a == 0) ? 1 : 0; }

Vector synthetic_feature(Index s, Index a) {
  Vector phi = Vector::Zero(kSyntheticDim);
  for (Index bit = 0; bit < kSyntheticBits; ++bit) phi(bit) = static_cast<double>((a >> bit) & 1);
  const int delta = synthetic_delta(s, a);
  phi(kSyntheticBits) = delta;
  phi(kSyntheticBits + 1) = 1 - delta;
  return phi;
}

std::vector<int> default_alpha(int horizon) {
  std::vector<int> alpha(static_cast<std::size_t>(horizon));
  for (int h = 1; h <= horizon; ++h) alpha[static_cast<std::size_t>(h - 1)] = h % 2;
  return alpha;
}

SyntheticInstance build_synthetic(const SyntheticConfig& config) {
  if (config.horizon < 1) throw ModelError("synthetic: horizon must be positive");
  if (!(config.r > 0.0 && config.r < 1.0)) throw ModelError("synthetic: r must lie in (0, 1)");
  if (!(config.p > 0.0 && config.p < 1.0)) throw ModelError("synthetic: p must lie in (0, 1)");
  const std::vector<int> alpha = config.alpha.empty() ? default_alpha(config.horizon) : config.alpha;
  if (static_cast<int>(alpha.size()) != config.horizon) throw ModelError("synthetic: alpha must have H bits");
  for (int bit : alpha) {
    if (bit != 0 && bit != 1) throw ModelError("synthetic: alpha entries must be 0 or 1");
  }

  constexpr Index S = 2;
  constexpr Index A = kSyntheticActions;
  constexpr Index d = kSyntheticDim;
  LinearMDPSpec spec;
  spec.horizon = config.horizon;
  spec.states = {"0", "1"};
  for (Index a = 0; a < A; ++a) spec.actions.push_back(std::to_string(a));
  spec.phi.resize(S * A, d);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) spec.phi.row(s * A + a) = synthetic_feature(s, a).transpose();
  }
  spec.theta = Matrix::Zero(config.horizon, d);
  for (int h = 1; h <= config.horizon; ++h) {
    const int alpha_h = alpha[static_cast<std::size_t>(h - 1)];
    Matrix nu = Matrix::Zero(S, d);
    for (Index next = 0; next < S; ++next) {
      nu(next, d - 2) = static_cast<double>((1 - next) ^ alpha_h);
      nu(next, d - 1) = static_cast<double>(next ^ alpha_h);
    }
    spec.nu.push_back(std::move(nu));
    spec.theta(h - 1, d - 2) = config.r;
    spec.theta(h - 1, d - 1) = 1.0 - config.r;
  }
  spec.initial_dist = Vector::Constant(S, 0.5);
  spec.reward_noise_std = config.reward_noise_std;
  // Binary action codes have up to six ones, so |phi| can reach sqrt(7).
  spec.feature_norm_exempt = true;

  Vector mu = Vector::Constant(A, (1.0 - config.p) / static_cast<double>(A - 1));
  mu(0) = config.p;
  return SyntheticInstance{LinearMDP(std::move(spec)), PolicyTable::stationary(config.horizon, S, mu), alpha};
}

// ---------------------------------------------------------------------------

namespace {

std::string action_label(const Vector& a) {
  std::ostringstream out;
  out << '(';
  for (Index i = 0; i < a.size(); ++i) {
    if (i) out << ',';
    out << static_cast<int>(a(i));
  }
  out << ')';
  return out.str();
}

// Enumerates {values}^n in lexicographic order.
std::vector<Vector> enumerate_vectors(int n, const std::vector<int>& values) {
  std::vector<Vector> out;
  std::vector<std::size_t> digits(static_cast<std::size_t>(n), 0);
  while (true) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = values[digits[static_cast<std::size_t>(i)]];
    out.push_back(std::move(v));
    int pos = n - 1;
    while (pos >= 0 && ++digits[static_cast<std::size_t>(pos)] == values.size()) {
      digits[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return out;
}

}  // namespace

HardInstance build_hard(const HardInstanceConfig& config) {
  const int d = config.d;
  const int H = config.horizon;
  const int m = d - 2;
  if (d < 3) throw ModelError("hard: d must be at least 3");
  if (H < 1) throw ModelError("hard: horizon must be positive");
  if (config.delta < 0.0 || config.delta > 1.0 / std::sqrt(3.0 * d) + 1e-15) {
    throw ModelError("hard: delta must lie in [0, 1/sqrt(3d)]");
  }
  if (static_cast<int>(config.u.size()) != H) throw ModelError("hard: u must have H rows");
  for (const auto& row : config.u) {
    if (static_cast<int>(row.size()) != m) throw ModelError("hard: u rows must have d - 2 entries");
    for (int x : row) {
      if (x != -1 && x != 1) throw ModelError("hard: u entries must be -1 or +1");
    }
  }
  if (config.full_action_set ? m > kMaxFullCoordinates : m > kMaxSignCoordinates) {
    throw ModelError("hard: d - 2 too large for the requested action set");
  }

  // Behavior support first, then every other materialized action.
  std::vector<Vector> actions;
  std::map<std::vector<int>, Index> seen;
  auto add = [&](const Vector& a) {
    std::vector<int> key(a.data(), a.data() + a.size());
    if (seen.emplace(key, static_cast<Index>(actions.size())).second) actions.push_back(a);
  };
  for (int j = 0; j < m; ++j) add(Vector::Unit(m, j));
  add(Vector::Zero(m));
  const auto extra = config.full_action_set ? enumerate_vectors(m, {-1, 0, 1}) : enumerate_vectors(m, {-1, 1});
  for (const Vector& a : extra) add(a);

  const auto A = static_cast<Index>(actions.size());
  constexpr Index S = 2;
  const double root2 = std::sqrt(2.0);
  const double root2d = std::sqrt(2.0 * d);
  LinearMDPSpec spec;
  spec.horizon = H;
  spec.states = {"+1", "-1"};
  for (const Vector& a : actions) spec.actions.push_back(action_label(a));
  spec.phi = Matrix::Zero(S * A, d);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      auto row = spec.phi.row(s * A + a);
      row.head(m) = actions[static_cast<std::size_t>(a)].transpose() / root2d;
      row(m + s) = 1.0 / root2;
    }
  }
  Matrix nu = Matrix::Zero(S, d);
  nu.col(m).setConstant(1.0 / root2);
  nu.col(m + 1).setConstant(1.0 / root2);
  spec.nu.assign(static_cast<std::size_t>(H), nu);
  spec.theta = Matrix::Zero(H, d);
  for (int h = 1; h <= H; ++h) {
    // "+ 0.0" folds -0 into +0 so delta = 0 serializes identically for every u.
    for (int j = 0; j < m; ++j) {
      spec.theta(h - 1, j) = config.delta * config.u[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(j)] + 0.0;
    }
    spec.theta(h - 1, m) = 1.0 / std::sqrt(3.0);
    spec.theta(h - 1, m + 1) = -1.0 / std::sqrt(3.0);
  }
  spec.initial_dist = Vector::Constant(S, 0.5);
  spec.reward_noise_std = config.reward_noise_std;
  spec.range_exempt = true;

  Vector mu = Vector::Zero(A);
  for (int j = 0; j < m; ++j) mu(j) = 1.0 / d;
  mu(m) = 2.0 / d;

  HardInstance out{LinearMDP(std::move(spec)), PolicyTable::stationary(H, S, mu), PolicyTable{}, std::move(actions),
                   config};
  std::vector<std::vector<Index>> best(static_cast<std::size_t>(H));
  for (int h = 1; h <= H; ++h) {
    const auto& u = config.u[static_cast<std::size_t>(h - 1)];
    Vector target(m);
    for (int j = 0; j < m; ++j) target(j) = u[static_cast<std::size_t>(j)];
    const Index index = find_action(out, target);
    best[static_cast<std::size_t>(h - 1)] = std::vector<Index>(S, index);
  }
  out.optimal = PolicyTable::deterministic(best, A);
  return out;
}

Index find_action(const HardInstance& instance, const Vector& a) {
  for (std::size_t i = 0; i < instance.action_vectors.size(); ++i) {
    if (instance.action_vectors[i] == a) return static_cast<Index>(i);
  }
  return -1;
}

double hard_suboptimality_closed_form(const HardInstance& instance, const PolicyTable& policy) {
  const int d = instance.config.d;
  const int m = d - 2;
  double total = 0.0;
  for (int h = 1; h <= instance.config.horizon; ++h) {
    const Matrix occ = occupancy(instance.mdp, policy, h);
    Vector mean_action = Vector::Zero(m);
    for (Index s = 0; s < occ.rows(); ++s) {
      for (Index a = 0; a < occ.cols(); ++a) mean_action += occ(s, a) * instance.action_vectors[static_cast<std::size_t>(a)];
    }
    const auto& u = instance.config.u[static_cast<std::size_t>(h - 1)];
    for (int j = 0; j < m; ++j) total += std::abs(u[static_cast<std::size_t>(j)] - mean_action(j));
  }
  return instance.config.delta / std::sqrt(2.0 * d) * total;
}

std::vector<std::vector<int>> random_signs(int horizon, int coordinates, std::uint64_t seed) {
  const CounterRng rng(seed);
  std::vector<std::vector<int>> u(static_cast<std::size_t>(horizon), std::vector<int>(static_cast<std::size_t>(coordinates)));
  for (int h = 0; h < horizon; ++h) {
    for (int j = 0; j < coordinates; ++j) {
      u[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)] =
          rng.uniform(static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(j), DrawPurpose::kInstance) < 0.5 ? -1 : 1;
    }
  }
  return u;
}

// ---------------------------------------------------------------------------

TabularInstance build_tabular(const TabularConfig& config) {
  const Index S = config.states;
  const Index A = config.actions;
  const int H = config.horizon;
  if (S < 1 || A < 1 || H < 1) throw ModelError("tabular: sizes must be positive");
  const CounterRng rng(config.seed);
  const Index d = S * A;

  LinearMDPSpec spec;
  spec.horizon = H;
  for (Index s = 0; s < S; ++s) spec.states.push_back(std::to_string(s));
  for (Index a = 0; a < A; ++a) spec.actions.push_back(std::to_string(a));
  spec.phi = Matrix::Identity(d, d);
  spec.theta.resize(H, d);
  for (int h = 1; h <= H; ++h) {
    Matrix nu(S, d);
    for (Index row = 0; row < d; ++row) {
      // Flat Dirichlet draw for the next-state distribution.
      Vector w(S);
      for (Index next = 0; next < S; ++next) {
        const auto key = static_cast<std::uint64_t>(row * S + next);
        w(next) = -std::log(1.0 - rng.uniform(static_cast<std::uint64_t>(h), key, DrawPurpose::kTransition));
      }
      nu.col(row) = w / w.sum();
      spec.theta(h - 1, row) = rng.uniform(static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(row), DrawPurpose::kInstance);
    }
    spec.nu.push_back(std::move(nu));
  }
  spec.initial_dist = Vector::Constant(S, 1.0 / static_cast<double>(S));
  spec.reward_noise_std = config.reward_noise_std;
  return TabularInstance{LinearMDP(std::move(spec)), PolicyTable::uniform(H, S, A)};
}

}  // namespace vapvi
