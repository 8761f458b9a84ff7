#include "vapvi/linear_mdp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace vapvi {

namespace {

std::string step_context(int h, Index s, Index a) {
  std::ostringstream out;
  out << "(h=" << h << ", s=" << s << ", a=" << a << ")";
  return out.str();
}

double clamp_checked(double value, double lo, double hi, const std::string& what) {
  if (value < lo - kModelTolerance || value > hi + kModelTolerance) {
    throw ModelError(what + " = " + format_double(value) + " outside [" + format_double(lo) + ", " +
                     format_double(hi) + "]");
  }
  return std::clamp(value, lo, hi);
}

}  // namespace

LinearMDP::LinearMDP(LinearMDPSpec spec) : spec_(std::move(spec)) {
  const int H = spec_.horizon;
  const Index S = num_states();
  const Index A = num_actions();
  const Index d = spec_.phi.cols();
  if (H < 1) throw ModelError("horizon must be positive");
  if (S < 1 || A < 1) throw ModelError("state and action lists must be nonempty");
  if (d < 1) throw ModelError("feature dimension must be positive");
  if (spec_.phi.rows() != S * A) throw ModelError("phi must have S * A rows");
  if (static_cast<int>(spec_.nu.size()) != H) throw ModelError("nu must have one entry per step");
  if (spec_.theta.rows() != H || spec_.theta.cols() != d) throw ModelError("theta must be H x d");
  if (spec_.initial_dist.size() != S) throw ModelError("initial distribution must have S entries");
  if (!(spec_.reward_noise_std >= 0.0)) throw ModelError("reward noise std must be nonnegative");
  if (!spec_.phi.allFinite() || !spec_.theta.allFinite()) throw ModelError("non-finite parameters");

  for (Index s = 0; s < S; ++s) {
    if (spec_.initial_dist(s) < 0.0) throw ModelError("initial distribution has a negative entry");
  }
  if (std::abs(spec_.initial_dist.sum() - 1.0) > kModelTolerance) {
    throw ModelError("initial distribution does not sum to one");
  }
  for (Index row = 0; row < S * A; ++row) {
    if (!spec_.feature_norm_exempt && spec_.phi.row(row).norm() > 1.0 + kModelTolerance) {
      throw ModelError("feature norm exceeds one at row " + std::to_string(row));
    }
  }

  features_ = FeatureMap{S, A, spec_.phi};
  transitions_.reserve(static_cast<std::size_t>(H));
  rewards_.reserve(static_cast<std::size_t>(H));
  for (int h = 1; h <= H; ++h) {
    const Matrix& nu = spec_.nu[static_cast<std::size_t>(h - 1)];
    if (nu.rows() != S || nu.cols() != d) throw ModelError("nu_h must be S x d");
    Matrix p = spec_.phi * nu.transpose();
    Matrix r(S, A);
    for (Index s = 0; s < S; ++s) {
      for (Index a = 0; a < A; ++a) {
        const Index row = s * A + a;
        const double total = p.row(row).sum();
        if (std::abs(total - 1.0) > kModelTolerance) {
          throw ModelError("transition row does not sum to one at " + step_context(h, s, a));
        }
        for (Index next = 0; next < S; ++next) {
          p(row, next) = clamp_checked(p(row, next), 0.0, 1.0, "P" + step_context(h, s, a));
        }
        const double mean = spec_.phi.row(row).dot(spec_.theta.row(h - 1));
        r(s, a) = spec_.range_exempt ? mean : clamp_checked(mean, 0.0, 1.0, "r" + step_context(h, s, a));
      }
    }
    transitions_.push_back(std::move(p));
    rewards_.push_back(std::move(r));
  }
}

std::size_t LinearMDP::checked_step(int step) const {
  if (step < 1 || step > spec_.horizon) throw std::out_of_range("step out of range");
  return static_cast<std::size_t>(step - 1);
}

// ---------------------------------------------------------------------------

PolicyTable PolicyTable::deterministic(const std::vector<std::vector<Index>>& actions, Index num_actions) {
  std::vector<Matrix> probs;
  probs.reserve(actions.size());
  for (const auto& row : actions) {
    Matrix m = Matrix::Zero(static_cast<Index>(row.size()), num_actions);
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (row[s] < 0 || row[s] >= num_actions) throw ModelError("policy action index out of range");
      m(static_cast<Index>(s), row[s]) = 1.0;
    }
    probs.push_back(std::move(m));
  }
  return PolicyTable(std::move(probs));
}

PolicyTable PolicyTable::stochastic(std::vector<Matrix> probs) {
  for (const Matrix& m : probs) {
    if ((m.array() < 0.0).any()) throw ModelError("policy has a negative probability");
    for (Index s = 0; s < m.rows(); ++s) {
      if (std::abs(m.row(s).sum() - 1.0) > 1e-12) throw ModelError("policy row does not sum to one");
    }
  }
  return PolicyTable(std::move(probs));
}

PolicyTable PolicyTable::stationary(int horizon, Index num_states, const Vector& action_probs) {
  Matrix m = action_probs.transpose().replicate(num_states, 1);
  return stochastic(std::vector<Matrix>(static_cast<std::size_t>(horizon), m));
}

PolicyTable PolicyTable::uniform(int horizon, Index num_states, Index num_actions) {
  return stationary(horizon, num_states, Vector::Constant(num_actions, 1.0 / static_cast<double>(num_actions)));
}

bool PolicyTable::is_deterministic() const {
  for (const Matrix& m : probs_) {
    if (((m.array() != 0.0) && (m.array() != 1.0)).any()) return false;
  }
  return true;
}

Index PolicyTable::action(int h, Index s) const {
  Index best = 0;
  step(h).row(s).maxCoeff(&best);
  return best;
}

void PolicyTable::check_against(const LinearMDP& mdp) const {
  if (horizon() != mdp.horizon()) throw ModelError("policy horizon does not match the MDP");
  for (const Matrix& m : probs_) {
    if (m.rows() != mdp.num_states()) throw ModelError("policy state count does not match the MDP");
    if (m.cols() != mdp.num_actions()) throw ModelError("policy action count does not match the MDP");
  }
}

// ---------------------------------------------------------------------------

double transition_prob(const LinearMDP& mdp, int step, Index s, Index a, Index next_state) {
  if (s < 0 || s >= mdp.num_states() || next_state < 0 || next_state >= mdp.num_states() || a < 0 ||
      a >= mdp.num_actions()) {
    throw std::out_of_range("state or action index out of range");
  }
  return mdp.transitions(step)(mdp.features().row_index(s, a), next_state);
}

Matrix bellman_image(const LinearMDP& mdp, int step, const Vector& v_next) {
  if (v_next.size() != mdp.num_states()) throw std::invalid_argument("value vector must have S entries");
  const Vector expected = mdp.transitions(step) * v_next;
  Matrix q = mdp.rewards(step);
  for (Index s = 0; s < q.rows(); ++s) {
    for (Index a = 0; a < q.cols(); ++a) q(s, a) += expected(s * q.cols() + a);
  }
  return q;
}

ExactValues exact_value_iteration(const LinearMDP& mdp) {
  const int H = mdp.horizon();
  const Index S = mdp.num_states();
  ExactValues out;
  out.q.resize(static_cast<std::size_t>(H));
  out.v = Matrix::Zero(H + 1, S);
  std::vector<std::vector<Index>> greedy(static_cast<std::size_t>(H), std::vector<Index>(S, 0));
  for (int h = H; h >= 1; --h) {
    Matrix q = bellman_image(mdp, h, out.v.row(h).transpose());
    for (Index s = 0; s < S; ++s) {
      Index best = 0;
      for (Index a = 1; a < q.cols(); ++a) {
        if (q(s, a) > q(s, best)) best = a;
      }
      greedy[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)] = best;
      out.v(h - 1, s) = q(s, best);
    }
    out.q[static_cast<std::size_t>(h - 1)] = std::move(q);
  }
  out.v_star = mdp.initial_dist().dot(out.v.row(0).transpose());
  out.greedy = PolicyTable::deterministic(greedy, mdp.num_actions());
  return out;
}

PolicyValue policy_value(const LinearMDP& mdp, const PolicyTable& policy) {
  policy.check_against(mdp);
  const int H = mdp.horizon();
  PolicyValue out;
  out.v = Matrix::Zero(H + 1, mdp.num_states());
  for (int h = H; h >= 1; --h) {
    const Matrix q = bellman_image(mdp, h, out.v.row(h).transpose());
    out.v.row(h - 1) = q.cwiseProduct(policy.step(h)).rowwise().sum().transpose();
  }
  out.value = mdp.initial_dist().dot(out.v.row(0).transpose());
  return out;
}

Matrix occupancy(const LinearMDP& mdp, const PolicyTable& policy, int step) {
  policy.check_against(mdp);
  if (step < 1 || step > mdp.horizon()) throw std::out_of_range("step out of range");
  const Index S = mdp.num_states();
  const Index A = mdp.num_actions();
  Vector state_dist = mdp.initial_dist();
  Matrix d(S, A);
  for (int h = 1;; ++h) {
    d = policy.step(h).array().colwise() * state_dist.array();
    if (h == step) break;
    const Matrix& p = mdp.transitions(h);
    Vector next = Vector::Zero(S);
    for (Index s = 0; s < S; ++s) {
      for (Index a = 0; a < A; ++a) next += d(s, a) * p.row(s * A + a).transpose();
    }
    state_dist = next;
  }
  return d;
}

Matrix conditional_variance(const LinearMDP& mdp, int step, const Vector& v_next) {
  if (v_next.size() != mdp.num_states()) throw std::invalid_argument("value vector must have S entries");
  const Matrix& p = mdp.transitions(step);
  const Vector first = p * v_next;
  const Vector second = p * v_next.cwiseAbs2();
  const Index A = mdp.num_actions();
  Matrix var(mdp.num_states(), A);
  for (Index s = 0; s < var.rows(); ++s) {
    for (Index a = 0; a < A; ++a) {
      const Index row = s * A + a;
      var(s, a) = std::max(0.0, second(row) - first(row) * first(row));
    }
  }
  return var;
}

CovarianceReport population_covariance(const LinearMDP& mdp, const PolicyTable& behavior, int step) {
  const Matrix d = occupancy(mdp, behavior, step);
  const FeatureMap& f = mdp.features();
  CovarianceReport out;
  out.sigma = Matrix::Zero(f.dim(), f.dim());
  for (Index s = 0; s < d.rows(); ++s) {
    for (Index a = 0; a < d.cols(); ++a) {
      if (d(s, a) == 0.0) continue;
      const auto phi = f.feature(s, a);
      out.sigma.noalias() += d(s, a) * (phi * phi.transpose());
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(out.sigma, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues()(0);
  return out;
}

double min_coverage_eigenvalue(const LinearMDP& mdp, const PolicyTable& behavior) {
  double kappa = std::numeric_limits<double>::infinity();
  for (int h = 1; h <= mdp.horizon(); ++h) {
    kappa = std::min(kappa, population_covariance(mdp, behavior, h).min_eigenvalue);
  }
  return kappa;
}

// ---------------------------------------------------------------------------

namespace {

void write_row(std::ostringstream& out, const auto& row) {
  out << '[';
  for (Index j = 0; j < row.size(); ++j) {
    if (j) out << ',';
    out << format_double(row(j));
  }
  out << ']';
}

void write_rows(std::ostringstream& out, const Matrix& m) {
  out << '[';
  for (Index i = 0; i < m.rows(); ++i) {
    if (i) out << ',';
    write_row(out, m.row(i));
  }
  out << ']';
}

void write_labels(std::ostringstream& out, const std::vector<std::string>& labels) {
  out << '[';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out << ',';
    out << nlohmann::json(labels[i]).dump();
  }
  out << ']';
}

Matrix read_rows(const nlohmann::json& j, Index cols, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of rows");
  Matrix m(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || static_cast<Index>(j[i].size()) != cols) {
      throw ConfigError(std::string(what) + " row has the wrong length");
    }
    for (std::size_t k = 0; k < j[i].size(); ++k) {
      m(static_cast<Index>(i), static_cast<Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string to_json(const LinearMDP& mdp) {
  const LinearMDPSpec& s = mdp.spec();
  std::ostringstream out;
  out << "{\n  \"horizon\": " << s.horizon << ",\n  \"feature_dim\": " << s.phi.cols() << ",\n  \"states\": ";
  write_labels(out, s.states);
  out << ",\n  \"actions\": ";
  write_labels(out, s.actions);
  out << ",\n  \"phi\": ";
  write_rows(out, s.phi);
  out << ",\n  \"nu\": [";
  for (std::size_t h = 0; h < s.nu.size(); ++h) {
    if (h) out << ',';
    write_rows(out, s.nu[h]);
  }
  out << "],\n  \"theta\": ";
  write_rows(out, s.theta);
  out << ",\n  \"initial_dist\": ";
  write_row(out, s.initial_dist);
  out << ",\n  \"reward_noise_std\": " << format_double(s.reward_noise_std);
  out << ",\n  \"range_exempt\": " << (s.range_exempt ? "true" : "false");
  out << ",\n  \"feature_norm_exempt\": " << (s.feature_norm_exempt ? "true" : "false") << "\n}\n";
  return out.str();
}

LinearMDP linear_mdp_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("instance JSON: ") + e.what());
  }
  static const std::vector<std::string> known = {"horizon", "feature_dim", "states",          "actions",
                                                 "phi",     "nu",          "theta",           "initial_dist",
                                                 "reward_noise_std", "range_exempt", "feature_norm_exempt"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("instance JSON: unknown key '" + key + "'");
    }
  }
  try {
    LinearMDPSpec spec;
    spec.horizon = j.at("horizon").get<int>();
    const auto d = j.at("feature_dim").get<Index>();
    spec.states = j.at("states").get<std::vector<std::string>>();
    spec.actions = j.at("actions").get<std::vector<std::string>>();
    spec.phi = read_rows(j.at("phi"), d, "phi");
    for (const auto& step : j.at("nu")) spec.nu.push_back(read_rows(step, d, "nu"));
    spec.theta = read_rows(j.at("theta"), d, "theta");
    const auto init = j.at("initial_dist").get<std::vector<double>>();
    spec.initial_dist = Eigen::Map<const Vector>(init.data(), static_cast<Index>(init.size()));
    spec.reward_noise_std = j.at("reward_noise_std").get<double>();
    spec.range_exempt = j.value("range_exempt", false);
    spec.feature_norm_exempt = j.value("feature_norm_exempt", false);
    return LinearMDP(std::move(spec));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("instance JSON: ") + e.what());
  }
}

LinearMDP load_linear_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open instance file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return linear_mdp_from_json(buffer.str());
}

void save_linear_mdp(const LinearMDP& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write instance file " + path);
  out << to_json(mdp);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t instance_hash(const LinearMDP& mdp) { return fnv1a(to_json(mdp)); }

}  // namespace vapvi
