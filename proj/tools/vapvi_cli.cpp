// Command-line front end: instance emission, dataset generation, experiment
// sweeps, summaries and exact oracle values.
//
//   vapvi synth --horizon 20 --out synth.json
//   vapvi hard --d 5 --horizon 3 --u-seed 7 --out hard.json
//   vapvi gen --instance synth.json --episodes 100 --seed 1 --out data.csv
//   vapvi run --config configs/figure1.json --jobs 4 --out results.csv
//   vapvi summarize --csv results.csv
//   vapvi oracle --instance synth.json

#include "vapvi/dataset.hpp"
#include "vapvi/experiment.hpp"
#include "vapvi/instances.hpp"
#include "vapvi/linear_mdp.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace vapvi;

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-aware pessimistic value iteration for offline linear MDPs"};
  app.require_subcommand(1);

  // synth
  SyntheticConfig synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Emit the two-state synthetic simulation instance as JSON");
  synth_cmd->add_option("--horizon", synth.horizon, "Horizon H")->capture_default_str();
  synth_cmd->add_option("--r", synth.r, "Reward parameter r")->capture_default_str();
  synth_cmd->add_option("--p", synth.p, "Behavior probability of action 0 (stored in metadata only)")->capture_default_str();
  synth_cmd->add_option("--alpha", synth.alpha, "Bits alpha_1..alpha_H (default h mod 2)")->delimiter(',');
  synth_cmd->add_option("--noise", synth.reward_noise_std, "Reward noise std")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output path (default stdout)");

  // hard
  HardInstanceConfig hard;
  std::uint64_t u_seed = 0;
  double hard_delta = -1.0;
  std::string hard_out;
  auto* hard_cmd = app.add_subcommand("hard", "Emit a lower-bound family instance as JSON");
  hard_cmd->add_option("--d", hard.d, "Feature dimension (>= 3)")->capture_default_str();
  hard_cmd->add_option("--horizon", hard.horizon, "Horizon H")->capture_default_str();
  hard_cmd->add_option("--delta", hard_delta, "Gap parameter (default 1/sqrt(3d))");
  hard_cmd->add_option("--u-seed", u_seed, "Seed for the sign matrix u")->capture_default_str();
  hard_cmd->add_option("--noise", hard.reward_noise_std, "Reward noise std")->capture_default_str();
  hard_cmd->add_flag("--full-actions", hard.full_action_set, "Materialize all 3^(d-2) actions");
  hard_cmd->add_option("--out", hard_out, "Output path (default stdout)");

  // gen
  std::string gen_instance, gen_config, gen_out;
  int gen_horizon = 0;
  Index gen_episodes = 100;
  std::uint64_t gen_seed = 0;
  auto* gen_cmd = app.add_subcommand("gen", "Roll out a seeded offline dataset (CSV + JSON sidecar)");
  gen_cmd->add_option("--instance", gen_instance, "Instance JSON (uniform behavior)");
  gen_cmd->add_option("--config", gen_config, "Experiment config whose instance section (and behavior) to use");
  gen_cmd->add_option("--horizon", gen_horizon, "Horizon when using --config (default: first of config horizons)");
  gen_cmd->add_option("--episodes,-K", gen_episodes, "Episode count K")->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output CSV path")->required();

  // run
  std::string run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  std::optional<double> run_lambda, run_c;
  bool no_split = false, no_higher_order = false;
  int jobs = 1;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment sweep and write the results CSV");
  run_cmd->add_option("--config", run_config, "Experiment config JSON")->required();
  run_cmd->add_option("--seed", run_seed, "Override master_seed");
  run_cmd->add_option("--lambda", run_lambda, "Override the ridge parameter");
  run_cmd->add_option("--bonus-c", run_c, "Override the bonus constant C");
  run_cmd->add_flag("--no-split", no_split, "Use D' = D (no data halving)");
  run_cmd->add_flag("--no-higher-order", no_higher_order, "Drop the higher-order bonus terms");
  run_cmd->add_option("--out", run_out, "Output CSV (overrides config output)");
  run_cmd->add_option("--jobs", jobs, "Worker threads")->capture_default_str();

  // summarize
  std::string sum_csv, sum_out;
  auto* sum_cmd = app.add_subcommand("summarize", "Mean and standard deviation per (algorithm, H, K)");
  sum_cmd->add_option("--csv", sum_csv, "Results CSV")->required();
  sum_cmd->add_option("--out", sum_out, "Output path (default stdout)");

  // oracle
  std::string oracle_instance, oracle_config;
  int oracle_horizon = 0;
  auto* oracle_cmd = app.add_subcommand("oracle", "Print the exact optimal value v*");
  oracle_cmd->add_option("--instance", oracle_instance, "Instance JSON");
  oracle_cmd->add_option("--config", oracle_config, "Experiment config (instance section)");
  oracle_cmd->add_option("--horizon", oracle_horizon, "Horizon when using --config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      emit(to_json(build_synthetic(synth).mdp), synth_out);
    } else if (*hard_cmd) {
      hard.delta = hard_delta < 0.0 ? 1.0 / std::sqrt(3.0 * hard.d) : hard_delta;
      hard.u = random_signs(hard.horizon, hard.d - 2, u_seed);
      emit(to_json(build_hard(hard).mdp), hard_out);
    } else if (*gen_cmd) {
      std::optional<Environment> env;
      if (!gen_config.empty()) {
        const ExperimentConfig config = load_config(gen_config);
        env = build_environment(config.instance, gen_horizon > 0 ? gen_horizon : config.horizons.front());
      } else if (!gen_instance.empty()) {
        LinearMDP mdp = load_linear_mdp(gen_instance);
        PolicyTable behavior = PolicyTable::uniform(mdp.horizon(), mdp.num_states(), mdp.num_actions());
        env = Environment{std::move(mdp), std::move(behavior), "uniform"};
      } else {
        throw ConfigError("gen needs --instance or --config");
      }
      const Dataset data = generate(env->mdp, env->behavior, gen_episodes, gen_seed, env->behavior_description);
      auto out = open_output(gen_out);
      write_csv(data, out);
      emit(metadata_json(data), gen_out + ".json");
    } else if (*run_cmd) {
      ExperimentConfig config = load_config(run_config);
      if (run_seed) config.master_seed = *run_seed;
      if (run_lambda) config.lambda = *run_lambda;
      if (run_c) config.c = *run_c;
      if (no_split) config.split = SplitMode::kNone;
      if (no_higher_order) config.higher_order = false;
      if (!run_out.empty()) config.output = run_out;
      if (config.output.empty()) throw ConfigError("no output path: set --out or the config's output key");
      const auto rows = run(config, jobs);
      auto out = open_output(config.output);
      write_results(rows, out);
      emit(describe_config(config), config.output + ".meta.json");
    } else if (*sum_cmd) {
      std::ifstream in(sum_csv);
      if (!in) throw ConfigError("cannot open " + sum_csv);
      std::ostringstream text;
      write_summary(summarize(read_results(in)), text);
      emit(text.str(), sum_out);
    } else if (*oracle_cmd) {
      std::optional<LinearMDP> mdp;
      if (!oracle_config.empty()) {
        const ExperimentConfig config = load_config(oracle_config);
        mdp = build_environment(config.instance, oracle_horizon > 0 ? oracle_horizon : config.horizons.front()).mdp;
      } else if (!oracle_instance.empty()) {
        mdp = load_linear_mdp(oracle_instance);
      } else {
        throw ConfigError("oracle needs --instance or --config");
      }
      std::cout << format_double(exact_value_iteration(*mdp).v_star) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
