#include "vapvi/experiment.hpp"
#include "vapvi/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace vapvi {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::vector<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

InstanceSpec parse_instance(const json& j) {
  InstanceSpec spec;
  const std::string type = j.at("type").get<std::string>();
  if (type == "synthetic") {
    reject_unknown(j, {"type", "r", "p", "alpha", "reward_noise_std"}, "instance");
    spec.kind = InstanceKind::kSynthetic;
    spec.r = j.value("r", spec.r);
    spec.p = j.value("p", spec.p);
    spec.alpha = j.value("alpha", spec.alpha);
  } else if (type == "hard") {
    reject_unknown(j, {"type", "d", "delta", "u_seed", "reward_noise_std"}, "instance");
    spec.kind = InstanceKind::kHard;
    spec.d = j.value("d", spec.d);
    spec.delta = j.value("delta", spec.delta);
    spec.u_seed = j.value("u_seed", spec.u_seed);
  } else if (type == "tabular") {
    reject_unknown(j, {"type", "states", "actions", "seed", "reward_noise_std"}, "instance");
    spec.kind = InstanceKind::kTabular;
    spec.states = j.value("states", spec.states);
    spec.actions = j.value("actions", spec.actions);
    spec.instance_seed = j.value("seed", spec.instance_seed);
  } else if (type == "json") {
    reject_unknown(j, {"type", "path", "reward_noise_std"}, "instance");
    spec.kind = InstanceKind::kJson;
    spec.path = j.at("path").get<std::string>();
  } else {
    throw ConfigError("instance: unknown type '" + type + "'");
  }
  if (j.contains("reward_noise_std")) spec.reward_noise_std = j.at("reward_noise_std").get<double>();
  return spec;
}

json instance_to_json(const InstanceSpec& spec) {
  json j;
  switch (spec.kind) {
    case InstanceKind::kSynthetic:
      j = {{"type", "synthetic"}, {"r", spec.r}, {"p", spec.p}, {"alpha", spec.alpha}};
      break;
    case InstanceKind::kHard:
      j = {{"type", "hard"}, {"d", spec.d}, {"delta", spec.delta}, {"u_seed", spec.u_seed}};
      break;
    case InstanceKind::kTabular:
      j = {{"type", "tabular"}, {"states", spec.states}, {"actions", spec.actions}, {"seed", spec.instance_seed}};
      break;
    case InstanceKind::kJson:
      j = {{"type", "json"}, {"path", spec.path}};
      break;
  }
  if (spec.reward_noise_std) j["reward_noise_std"] = *spec.reward_noise_std;
  return j;
}

}  // namespace

Environment build_environment(const InstanceSpec& spec, int horizon) {
  switch (spec.kind) {
    case InstanceKind::kSynthetic: {
      SyntheticConfig config;
      config.horizon = horizon;
      config.r = spec.r;
      config.p = spec.p;
      if (!spec.alpha.empty()) {
        if (static_cast<int>(spec.alpha.size()) < horizon) throw ConfigError("alpha is shorter than the horizon");
        config.alpha.assign(spec.alpha.begin(), spec.alpha.begin() + horizon);
      }
      config.reward_noise_std = spec.reward_noise_std.value_or(0.0);
      auto inst = build_synthetic(config);
      std::ostringstream desc;
      desc << "synthetic: action 0 w.p. " << format_double(spec.p) << ", others uniform";
      return Environment{std::move(inst.mdp), std::move(inst.behavior), desc.str()};
    }
    case InstanceKind::kHard: {
      HardInstanceConfig config;
      config.d = spec.d;
      config.horizon = horizon;
      config.delta = spec.delta < 0.0 ? 1.0 / std::sqrt(3.0 * spec.d) : spec.delta;
      config.u = random_signs(horizon, spec.d - 2, spec.u_seed);
      config.reward_noise_std = spec.reward_noise_std.value_or(1.0);
      auto inst = build_hard(config);
      return Environment{std::move(inst.mdp), std::move(inst.behavior), "hard: mu(e_j) = 1/d, mu(0) = 2/d"};
    }
    case InstanceKind::kTabular: {
      TabularConfig config{spec.states, spec.actions, horizon, spec.instance_seed,
                           spec.reward_noise_std.value_or(0.0)};
      auto inst = build_tabular(config);
      return Environment{std::move(inst.mdp), std::move(inst.behavior), "uniform"};
    }
    case InstanceKind::kJson: {
      LinearMDP loaded = load_linear_mdp(spec.path);
      if (loaded.horizon() != horizon) throw ConfigError("instance horizon does not match the requested horizon");
      if (spec.reward_noise_std) {
        LinearMDPSpec s = loaded.spec();
        s.reward_noise_std = *spec.reward_noise_std;
        loaded = LinearMDP(std::move(s));
      }
      PolicyTable behavior = PolicyTable::uniform(horizon, loaded.num_states(), loaded.num_actions());
      return Environment{std::move(loaded), std::move(behavior), "uniform"};
    }
  }
  throw ConfigError("unknown instance kind");
}

AlgorithmSpec algorithm_by_name(const std::string& name, double c, bool higher_order) {
  AlgorithmSpec spec;
  spec.name = name;
  spec.bonus.c = c;
  spec.bonus.higher_order = higher_order;
  if (name == "VAPVI") {
    spec.bonus.kind = BonusKind::kVapvi;
    spec.weighting = Weighting::kVariance;
  } else if (name == "VAPVI-I") {
    spec.bonus.kind = BonusKind::kVapviImproved;
    spec.weighting = Weighting::kVariance;
  } else if (name == "PEVI") {
    spec.bonus.kind = BonusKind::kPevi;
    spec.weighting = Weighting::kUnit;
  } else if (name == "LSVI") {
    spec.bonus.kind = BonusKind::kNone;
    spec.weighting = Weighting::kUnit;
  } else if (name == "VAVI") {
    spec.bonus.kind = BonusKind::kNone;
    spec.weighting = Weighting::kVariance;
  } else {
    throw ConfigError("unknown algorithm '" + name + "'");
  }
  return spec;
}

std::vector<Index> default_k_grid() {
  std::vector<Index> grid;
  for (int i = 0; i < 20; ++i) {
    const auto k = static_cast<Index>(std::lround(5.0 * std::pow(200.0, i / 19.0)));
    if (grid.empty() || grid.back() != k) grid.push_back(k);
  }
  return grid;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  reject_unknown(j,
                 {"instance", "algorithms", "k_grid", "trials", "horizons", "lambda", "C", "master_seed", "split_mode",
                  "higher_order", "variance_offset", "record_timing", "output"},
                 "config");
  ExperimentConfig config;
  try {
    if (j.contains("instance")) config.instance = parse_instance(j.at("instance"));
    config.algorithms = j.value("algorithms", config.algorithms);
    config.k_grid = j.value("k_grid", default_k_grid());
    config.trials = j.value("trials", config.trials);
    config.horizons = j.value("horizons", config.horizons);
    config.lambda = j.value("lambda", config.lambda);
    config.c = j.value("C", config.c);
    config.master_seed = j.value("master_seed", config.master_seed);
    const std::string split = j.value("split_mode", std::string("half"));
    if (split == "half") {
      config.split = SplitMode::kHalf;
    } else if (split == "none") {
      config.split = SplitMode::kNone;
    } else {
      throw ConfigError("config: split_mode must be 'half' or 'none'");
    }
    config.higher_order = j.value("higher_order", config.higher_order);
    config.variance_offset = j.value("variance_offset", config.variance_offset);
    config.record_timing = j.value("record_timing", config.record_timing);
    config.output = j.value("output", config.output);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (config.algorithms.empty() || config.k_grid.empty() || config.horizons.empty()) {
    throw ConfigError("config: algorithms, k_grid and horizons must be nonempty");
  }
  if (config.trials < 1) throw ConfigError("config: trials must be at least 1");
  if (!(config.lambda > 0.0)) throw ConfigError("config: lambda must be positive");
  if (config.c < 0.0) throw ConfigError("config: C must be nonnegative");
  if (config.variance_offset != 0 && config.variance_offset != 1) throw ConfigError("config: variance_offset must be 0 or 1");
  for (Index k : config.k_grid) {
    if (k < 1) throw ConfigError("config: episode counts must be positive");
  }
  for (int h : config.horizons) {
    if (h < 1) throw ConfigError("config: horizons must be positive");
  }
  for (const auto& name : config.algorithms) algorithm_by_name(name, config.c, config.higher_order);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string describe_config(const ExperimentConfig& config) {
  json j;
  j["instance"] = instance_to_json(config.instance);
  j["algorithms"] = config.algorithms;
  j["k_grid"] = config.k_grid;
  j["trials"] = config.trials;
  j["horizons"] = config.horizons;
  j["lambda"] = config.lambda;
  j["C"] = config.c;
  j["master_seed"] = config.master_seed;
  j["split_mode"] = config.split == SplitMode::kHalf ? "half" : "none";
  j["higher_order"] = config.higher_order;
  j["variance_offset"] = config.variance_offset;
  j["record_timing"] = config.record_timing;
  j["output"] = config.output;
  j["notes"] = {
      {"pevi_beta", "C * d * H"},
      {"pairing", "all algorithms in a (H, K, trial) cell share one dataset"},
      {"split_half", "2K episodes are rolled out; D and D' hold K each"},
      {"reward_noise_std_default", "0 for synthetic/tabular, 1 for hard"},
      {"alpha_default", "alpha_h = h mod 2"},
  };
  return j.dump(2) + "\n";
}

std::uint64_t child_seed(std::uint64_t master, int horizon, Index episodes, int trial) {
  return hash_key(master, static_cast<std::uint64_t>(horizon), static_cast<std::uint64_t>(episodes),
                  static_cast<std::uint64_t>(trial));
}

std::vector<ResultRow> run(const ExperimentConfig& config, int jobs) {
  struct Cell {
    std::size_t env;
    int horizon;
    Index episodes;
    int trial;
    std::uint64_t seed;
  };
  struct PreparedEnv {
    Environment env;
    double v_star;
  };

  std::vector<AlgorithmSpec> algorithms;
  for (const auto& name : config.algorithms) algorithms.push_back(algorithm_by_name(name, config.c, config.higher_order));

  std::vector<PreparedEnv> envs;
  for (int h : config.horizons) {
    Environment env = build_environment(config.instance, h);
    const double v_star = exact_value_iteration(env.mdp).v_star;
    envs.push_back(PreparedEnv{std::move(env), v_star});
  }

  std::vector<Cell> cells;
  std::set<std::uint64_t> seeds;
  for (std::size_t e = 0; e < config.horizons.size(); ++e) {
    for (Index k : config.k_grid) {
      for (int trial = 0; trial < config.trials; ++trial) {
        const std::uint64_t seed = child_seed(config.master_seed, config.horizons[e], k, trial);
        if (!seeds.insert(seed).second) throw ConfigError("child seed collision; change master_seed");
        cells.push_back(Cell{e, config.horizons[e], k, trial, seed});
      }
    }
  }

  const std::size_t per_cell = algorithms.size();
  std::vector<ResultRow> rows(cells.size() * per_cell);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        const Cell& cell = cells[i];
        const PreparedEnv& prepared = envs[cell.env];
        const LinearMDP& mdp = prepared.env.mdp;
        const Index rollout = config.split == SplitMode::kHalf ? 2 * cell.episodes : cell.episodes;
        const DataPair data = make_data_pair(
            generate(mdp, prepared.env.behavior, rollout, cell.seed, prepared.env.behavior_description), config.split);
        for (std::size_t a = 0; a < per_cell; ++a) {
          const auto start = std::chrono::steady_clock::now();
          SolverOptions options;
          options.lambda = config.lambda;
          options.bonus = algorithms[a].bonus;
          options.weighting = algorithms[a].weighting;
          options.variance_offset = config.variance_offset;
          options.check_range = !mdp.range_exempt();
          const PolicySolution solution = solve(*data.main, *data.variance, mdp.features(), options);
          const double gap = suboptimality(mdp, solution.policy, prepared.v_star);
          if (gap < -1e-10) throw NumericalError("negative suboptimality " + format_double(gap));
          const auto elapsed = std::chrono::steady_clock::now() - start;
          rows[i * per_cell + a] = ResultRow{
              algorithms[a].name, cell.horizon, cell.episodes, cell.trial, cell.seed, gap,
              config.record_timing ? std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() : 0};
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cells.size());
      }
    }
  };

  const int threads = std::max(1, jobs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void write_results(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << kResultHeader << '\n';
  for (const ResultRow& r : rows) {
    out << r.algorithm << ',' << r.horizon << ',' << r.episodes << ',' << r.trial << ',' << r.seed << ','
        << format_double(r.suboptimality) << ',' << r.wall_ms << '\n';
  }
}

std::vector<ResultRow> read_results(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultHeader) throw ConfigError("results CSV: missing or wrong header");
  std::vector<ResultRow> rows;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream split(line);
    while (std::getline(split, field, ',')) fields.push_back(field);
    if (fields.size() != 7) throw ConfigError("results CSV: malformed row at line " + std::to_string(line_number));
    try {
      std::size_t used = 0;
      ResultRow r;
      r.algorithm = fields[0];
      r.horizon = std::stoi(fields[1]);
      r.episodes = std::stoll(fields[2]);
      r.trial = std::stoi(fields[3]);
      r.seed = std::stoull(fields[4]);
      r.suboptimality = std::stod(fields[5], &used);
      if (used != fields[5].size()) throw std::invalid_argument("trailing characters");
      r.wall_ms = std::stoll(fields[6]);
      if (r.algorithm.empty()) throw std::invalid_argument("empty algorithm");
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ConfigError("results CSV: malformed row at line " + std::to_string(line_number));
    }
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<std::string, int, Index>, std::vector<double>> groups;
  for (const ResultRow& r : rows) groups[{r.algorithm, r.horizon, r.episodes}].push_back(r.suboptimality);
  std::vector<SummaryRow> out;
  for (const auto& [key, values] : groups) {
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    out.push_back(SummaryRow{std::get<0>(key), std::get<1>(key), std::get<2>(key), static_cast<Index>(values.size()),
                             mean, stddev});
  }
  return out;
}

void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "algorithm,H,K,n,mean,std\n";
  for (const SummaryRow& r : rows) {
    out << r.algorithm << ',' << r.horizon << ',' << r.episodes << ',' << r.count << ',' << format_double(r.mean) << ','
        << format_double(r.stddev) << '\n';
  }
}

}  // namespace vapvi
