#pragma once

#include "vapvi/dataset.hpp"
#include "vapvi/instances.hpp"
#include "vapvi/pessimistic_vi.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vapvi {

enum class InstanceKind { kSynthetic, kHard, kTabular, kJson };

struct InstanceSpec {
  InstanceKind kind = InstanceKind::kSynthetic;
  // synthetic
  double r = 0.9;
  double p = 0.6;
  std::vector<int> alpha;  // empty: alpha_h = h mod 2
  // hard
  int d = 5;
  double delta = -1.0;  // negative: 1 / sqrt(3d)
  std::uint64_t u_seed = 0;
  // tabular
  Index states = 3;
  Index actions = 3;
  std::uint64_t instance_seed = 0;
  // json
  std::string path;
  /// Unset: 0 for synthetic/tabular/json-default, 1 for hard.
  std::optional<double> reward_noise_std;
};

/// An instance realized for one horizon, with its behavior policy.
struct Environment {
  LinearMDP mdp;
  PolicyTable behavior;
  std::string behavior_description;
};

Environment build_environment(const InstanceSpec& spec, int horizon);

struct AlgorithmSpec {
  std::string name;
  BonusSpec bonus;
  Weighting weighting = Weighting::kUnit;
};

/// VAPVI, VAPVI-I, PEVI, LSVI or VAVI with the given constants.
AlgorithmSpec algorithm_by_name(const std::string& name, double c, bool higher_order);

struct ExperimentConfig {
  InstanceSpec instance;
  std::vector<std::string> algorithms = {"VAPVI", "PEVI", "LSVI", "VAVI"};
  std::vector<Index> k_grid;
  int trials = 50;
  std::vector<int> horizons = {20};
  double lambda = 0.01;
  double c = 1.0;
  std::uint64_t master_seed = 0;
  SplitMode split = SplitMode::kHalf;
  bool higher_order = true;
  int variance_offset = 0;
  /// Record wall-clock milliseconds; when false wall_ms is 0 so output is reproducible.
  bool record_timing = false;
  std::string output;
};

/// 20 log-spaced episode counts from 5 to 1000.
std::vector<Index> default_k_grid();

/// Parses a config document; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// The fully resolved config (defaults filled in) as JSON.
std::string describe_config(const ExperimentConfig& config);

struct ResultRow {
  std::string algorithm;
  int horizon = 0;
  Index episodes = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double suboptimality = 0.0;
  std::int64_t wall_ms = 0;
};

/// Per-cell seed from (master, H, K, trial).
std::uint64_t child_seed(std::uint64_t master, int horizon, Index episodes, int trial);

/// Runs every (H, K, trial) cell on `jobs` worker threads. Rows come back in
/// (H, K, trial, algorithm) order regardless of scheduling.
std::vector<ResultRow> run(const ExperimentConfig& config, int jobs = 1);

inline constexpr const char* kResultHeader = "algorithm,H,K,trial,seed,subopt,wall_ms";
void write_results(const std::vector<ResultRow>& rows, std::ostream& out);
std::vector<ResultRow> read_results(std::istream& in);

struct SummaryRow {
  std::string algorithm;
  int horizon = 0;
  Index episodes = 0;
  Index count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single row
};

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);
void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out);

}  // namespace vapvi
