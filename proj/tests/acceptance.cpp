// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Usage: acceptance <figure1-config.json>

#include "oracles.hpp"
#include "vapvi/experiment.hpp"
#include "vapvi/instances.hpp"
#include "vapvi/pessimistic_vi.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace vapvi;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, pattern, a, b, c, d);
  return buffer;
}

// Random linear MDP whose features are points of the simplex and whose next
// state law is a feature-weighted mixture of d base distributions.
LinearMDP random_simplex_mdp(oracle::TestRng& rng, Index S, Index A, int H, Index d) {
  auto simplex = [&](Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = -std::log(1.0 - rng.uniform());
    return Vector(v / v.sum());
  };
  LinearMDPSpec spec;
  spec.horizon = H;
  for (Index s = 0; s < S; ++s) spec.states.push_back(std::to_string(s));
  for (Index a = 0; a < A; ++a) spec.actions.push_back(std::to_string(a));
  spec.phi.resize(S * A, d);
  for (Index i = 0; i < S * A; ++i) spec.phi.row(i) = simplex(d).transpose();
  spec.theta.resize(H, d);
  for (int h = 0; h < H; ++h) {
    Matrix nu(S, d);
    for (Index j = 0; j < d; ++j) nu.col(j) = simplex(S);
    spec.nu.push_back(nu);
    for (Index j = 0; j < d; ++j) spec.theta(h, j) = rng.uniform();
  }
  spec.initial_dist = simplex(S);
  return LinearMDP(std::move(spec));
}

Outcome oracle_exactness() {
  oracle::TestRng rng(101);
  const auto start = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Index A = 1 + rng.below(3);
    const int H = 1 + static_cast<int>(rng.below(3));
    const Index d = 1 + rng.below(4);
    const LinearMDP mdp = random_simplex_mdp(rng, 2, A, H, d);
    const double exact = exact_value_iteration(mdp).v_star;
    worst = std::max(worst, std::fabs(exact - static_cast<double>(oracle::brute_force_v_star(mdp.spec()))));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-12 && elapsed < 1.0, fmt("20 instances, max |v* - brute force| = %.3g, %.3f s", worst, elapsed)};
}

Outcome ridge_correctness() {
  oracle::TestRng rng(202);
  double worst_residual = 0.0;
  double worst_oracle = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Index d = 1 + rng.below(20);
    const Index n = 1 + rng.below(200);
    Matrix x(n, d);
    Vector y(n), w(n);
    for (Index k = 0; k < n; ++k) {
      for (Index j = 0; j < d; ++j) x(k, j) = rng.uniform(-1.0, 1.0);
      y(k) = rng.uniform(-5.0, 5.0);
      w(k) = rng.uniform(0.01, 1.0);
    }
    const double lambda = std::pow(10.0, rng.uniform(-3.0, 1.0));
    const auto system = RidgeSystem<double>::build(x, w, lambda);
    const Matrix b = weighted_moment<double>(x, y, w);
    const Matrix sol = system.solve(b);
    worst_residual = std::max(worst_residual, system.relative_residual(sol, b));
    const Vector expected = oracle::naive_ridge(x, y, w, lambda);
    const Vector got = ridge<double>(x, y, w, lambda).weights;
    worst_oracle = std::max(worst_oracle, (got - expected).norm() / std::max(1.0, expected.norm()));
  }
  return {worst_residual <= 1e-8 && worst_oracle <= 1e-8,
          fmt("100 problems, max residual = %.3g, max oracle gap = %.3g", worst_residual, worst_oracle)};
}

Outcome variance_consistency() {
  const auto start = Clock::now();
  SyntheticConfig config;
  config.horizon = 20;
  const auto inst = build_synthetic(config);
  const ExactValues exact = exact_value_iteration(inst.mdp);
  std::vector<double> errors;
  for (Index K : {100, 1000, 10000}) {
    const Dataset data = generate(inst.mdp, inst.behavior, K, 303);
    double worst = 0.0;
    for (int h = 1; h <= config.horizon; ++h) {
      const Vector v_next = exact.v.row(h).transpose();
      const VarianceModel model = fit_variance(data, h, v_next, 0.01, inst.mdp.features());
      const Matrix truth = conditional_variance(inst.mdp, h, v_next);
      for (Index s = 0; s < 2; ++s) {
        for (Index a = 0; a < kSyntheticActions; ++a) {
          if (inst.behavior.prob(h, s, a) <= 0.0) continue;
          const double est = variance_estimate(model, inst.mdp.features().feature(s, a));
          worst = std::max(worst, std::fabs(est - truth(s, a)));
        }
      }
    }
    errors.push_back(worst);
  }
  const double elapsed = seconds_since(start);
  const bool pass = errors[1] < errors[0] && errors[2] < errors[1] && errors[2] < 0.05 && elapsed < 30.0;
  return {pass, fmt("sup error K=100: %.4g, K=1000: %.4g, K=10000: %.4g, %.1f s", errors[0], errors[1], errors[2],
                    elapsed)};
}

Outcome figure_one(const std::string& config_path) {
  const auto start = Clock::now();
  const ExperimentConfig config = load_config(config_path);
  const auto rows = run(config, 1);
  std::map<std::tuple<std::string, int, Index>, double> mean;
  for (const auto& s : summarize(rows)) mean[{s.algorithm, s.horizon, s.episodes}] = s.mean;
  auto at = [&](const std::string& name, int H, Index K) {
    const auto it = mean.find({name, H, K});
    if (it == mean.end()) throw ConfigError("figure-one config lacks " + name + " at H=" + std::to_string(H) + ", K=" + std::to_string(K));
    return it->second;
  };
  const bool a = at("VAPVI", 20, 1000) <= at("PEVI", 20, 1000) && at("VAPVI", 50, 1000) <= at("PEVI", 50, 1000);
  const double gap20 = at("PEVI", 20, 1000) - at("VAPVI", 20, 1000);
  const double gap50 = at("PEVI", 50, 1000) - at("VAPVI", 50, 1000);
  const bool b = gap50 > gap20;
  const bool c = at("VAPVI", 20, 1000) <= 0.5 * at("VAPVI", 20, 50) && at("VAPVI", 50, 1000) <= 0.5 * at("VAPVI", 50, 50);
  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << "(a) " << (a ? "ok" : "no") << " (b) " << (b ? "ok" : "no") << " (c) " << (c ? "ok" : "no");
  detail << fmt("; K=1000 VAPVI/PEVI H=20: %.3f/%.3f, H=50: %.3f/%.3f", at("VAPVI", 20, 1000), at("PEVI", 20, 1000),
                at("VAPVI", 50, 1000), at("PEVI", 50, 1000));
  detail << fmt("; VAPVI K=50 H=20: %.3f, H=50: %.3f; %.0f s", at("VAPVI", 20, 50), at("VAPVI", 50, 50), elapsed);
  return {a && b && c && elapsed < 600.0, detail.str()};
}

Outcome pessimism_sandwich() {
  SyntheticConfig config;
  config.horizon = 10;
  const auto inst = build_synthetic(config);
  int steps = 0, premise = 0, violations = 0;
  // Premise counts for runs without the higher-order term, where it is not automatic.
  int steps_lean = 0, premise_lean = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index K = 50 * static_cast<Index>(1 + seed % 4);
    const DataPair data = make_data_pair(generate(inst.mdp, inst.behavior, 2 * K, 500 + seed), SplitMode::kHalf);
    SolverOptions options;
    options.bonus.kind = BonusKind::kVapvi;
    options.bonus.higher_order = seed % 2 == 0;
    options.weighting = Weighting::kVariance;
    const auto sol = solve(*data.main, *data.variance, inst.mdp.features(), options);
    for (int h = 1; h <= config.horizon; ++h) {
      const auto idx = static_cast<std::size_t>(h - 1);
      ++steps;
      steps_lean += !options.bonus.higher_order;
      const Matrix t = bellman_image(inst.mdp, h, sol.v_hat.row(h).transpose());
      const Matrix& gamma = sol.bonus[idx];
      const Matrix fitted = sol.q_bar[idx] + gamma;
      if (((t - fitted).cwiseAbs().array() > gamma.array()).any()) continue;
      ++premise;
      premise_lean += !options.bonus.higher_order;
      const Matrix zeta = t - sol.q_hat[idx];
      if (zeta.minCoeff() < -1e-10 || ((zeta - 2.0 * gamma).array() > 1e-10).any()) ++violations;
    }
  }
  return {violations == 0,
          fmt("20 runs, premise held at %.0f of %.0f steps (%.0f of %.0f without the higher-order term)", premise, steps,
              premise_lean, steps_lean) +
              fmt(", pass rate %.3f, violations %.0f", static_cast<double>(premise) / steps, violations)};
}

Outcome tabular_reduction() {
  double worst_offdiag = 0.0;
  double worst_w = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index S = 2 + static_cast<Index>(seed % 3);
    const Index A = 2 + static_cast<Index>(seed % 2);
    const int H = 3 + static_cast<int>(seed % 3);
    const auto inst = build_tabular({S, A, H, 600 + seed, 0.0});
    const Dataset full = generate(inst.mdp, inst.behavior, 400, seed);
    const SplitMode mode = seed % 2 == 0 ? SplitMode::kNone : SplitMode::kHalf;
    const DataPair data = make_data_pair(full, mode);
    SolverOptions options;
    options.lambda = 1e-8;
    options.weighting = Weighting::kVariance;
    const auto sol = solve(*data.main, *data.variance, inst.mdp.features(), options);
    for (int h = 1; h <= H; ++h) {
      const auto idx = static_cast<std::size_t>(h - 1);
      Matrix off = sol.lambda_hat[idx];
      off.diagonal().setZero();
      worst_offdiag = std::max(worst_offdiag, off.cwiseAbs().maxCoeff());
      const Vector v_next = sol.v_hat.row(h).transpose();
      const Vector sigma2 = oracle::tabular_sigma_sq(data.main->step(h), data.variance->step(h), v_next, S, A, 1e-8,
                                                     static_cast<double>(H - h + 1));
      const Vector expected = oracle::tabular_backup(data.main->step(h), v_next, sigma2, S, A, 1e-8);
      worst_w = std::max(worst_w, (sol.w_hat[idx] - expected).cwiseAbs().maxCoeff());
    }
  }
  return {worst_offdiag <= 1e-10 && worst_w <= 1e-6,
          fmt("10 instances, max off-diagonal = %.3g, max |w - backup| = %.3g", worst_offdiag, worst_w)};
}

Outcome hard_identities() {
  oracle::TestRng rng(707);
  double worst_gap = 0.0, worst_var = 0.0, last_step_var = 0.0;
  int greedy_mismatch = 0;
  for (int d : {5, 8}) {
    for (int H : {3, 5}) {
      HardInstanceConfig config;
      config.d = d;
      config.horizon = H;
      config.delta = 1.0 / std::sqrt(3.0 * d);
      config.u = random_signs(H, d - 2, static_cast<std::uint64_t>(10 * d + H));
      const auto inst = build_hard(config);
      const ExactValues exact = exact_value_iteration(inst.mdp);
      const Index A = inst.mdp.num_actions();
      for (int p = 0; p < 10; ++p) {
        std::vector<Matrix> probs;
        for (int h = 0; h < H; ++h) {
          Matrix m(2, A);
          for (Index s = 0; s < 2; ++s) {
            for (Index a = 0; a < A; ++a) m(s, a) = rng.uniform();
            m.row(s) /= m.row(s).sum();
          }
          probs.push_back(m);
        }
        const auto pi = PolicyTable::stochastic(probs);
        const double dp = exact.v_star - policy_value(inst.mdp, pi).value;
        worst_gap = std::max(worst_gap, std::fabs(hard_suboptimality_closed_form(inst, pi) - dp));
      }
      for (int h = 1; h <= H; ++h) {
        const Matrix var = conditional_variance(inst.mdp, h, exact.v.row(h).transpose());
        if (h < H) {
          worst_var = std::max(worst_var, (var.array() - 1.0 / 6.0).abs().maxCoeff());
        } else {
          last_step_var = std::max(last_step_var, var.cwiseAbs().maxCoeff());
        }
        for (Index s = 0; s < 2; ++s) greedy_mismatch += exact.greedy.action(h, s) != inst.optimal.action(h, s);
      }
    }
  }
  return {worst_gap <= 1e-10 && worst_var <= 1e-12 && greedy_mismatch == 0,
          fmt("max closed-form gap = %.3g, max |Var - 1/6| (h < H) = %.3g, Var at h = H = %.3g, greedy mismatches %.0f",
              worst_gap, worst_var, last_step_var, greedy_mismatch)};
}

Outcome jensen_ordering() {
  oracle::TestRng rng(808);
  double worst = -1e300;
  for (int i = 0; i < 50; ++i) {
    const Index d = 1 + rng.below(12);
    Matrix b(d, d);
    for (Index r = 0; r < d; ++r) {
      for (Index c = 0; c < d; ++c) b(r, c) = rng.uniform(-1.0, 1.0);
    }
    const Matrix m = b * b.transpose() + std::pow(10.0, rng.uniform(-3.0, 0.0)) * Matrix::Identity(d, d);
    const Matrix m_inv = RidgeSystem<double>(m, 1.0, 0).gram_inverse();
    const Index n = 1 + rng.below(20);
    Vector p(n);
    for (Index k = 0; k < n; ++k) p(k) = rng.uniform();
    p /= p.sum();
    Vector mean = Vector::Zero(d);
    double expected_norm = 0.0;
    for (Index k = 0; k < n; ++k) {
      Vector x(d);
      for (Index j = 0; j < d; ++j) x(j) = rng.uniform(-1.0, 1.0);
      mean += p(k) * x;
      expected_norm += p(k) * std::sqrt(quadratic_form<double>(m_inv, x));
    }
    worst = std::max(worst, std::sqrt(quadratic_form<double>(m_inv, mean)) - expected_norm);
  }
  return {worst <= 1e-12, fmt("50 matrices, max (|E phi| - E|phi|) = %.3g", worst)};
}

Outcome determinism() {
  const ExperimentConfig config = parse_config(R"({
    "instance": {"type": "synthetic"},
    "algorithms": ["VAPVI", "VAPVI-I", "PEVI", "LSVI", "VAVI"],
    "k_grid": [5, 20, 60],
    "trials": 4,
    "horizons": [5, 10],
    "master_seed": 909
  })");
  auto csv = [&](int jobs) {
    std::ostringstream out;
    write_results(run(config, jobs), out);
    return out.str();
  };
  const std::string first = csv(1);
  const bool same_twice = first == csv(1);
  const bool same_jobs = first == csv(8);
  return {same_twice && same_jobs, std::string("repeat run ") + (same_twice ? "identical" : "differs") +
                                       ", jobs 1 vs 8 " + (same_jobs ? "identical" : "differs") + ", " +
                                       std::to_string(first.size()) + " bytes"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <figure1-config.json>\n", argv[0]);
    return 2;
  }
  const std::string figure_config = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle exactness", oracle_exactness},
      {"ridge correctness", ridge_correctness},
      {"variance consistency", variance_consistency},
      {"figure-1 reproduction", [&] { return figure_one(figure_config); }},
      {"pessimism sandwich", pessimism_sandwich},
      {"tabular reduction", tabular_reduction},
      {"hard-instance identities", hard_identities},
      {"Jensen ordering", jensen_ordering},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("%s AC%zu %s: %s\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
