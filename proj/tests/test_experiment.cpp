#include "vapvi/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

using namespace vapvi;

namespace {

std::string csv_of(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  write_results(rows, out);
  return out.str();
}

ExperimentConfig small_config() {
  return parse_config(R"({
    "instance": {"type": "synthetic"},
    "algorithms": ["VAPVI", "VAPVI-I", "PEVI", "LSVI", "VAVI"],
    "k_grid": [6, 20],
    "trials": 3,
    "horizons": [4, 6],
    "master_seed": 5
  })");
}

ResultRow row(const std::string& name, double value) {
  ResultRow r;
  r.algorithm = name;
  r.horizon = 20;
  r.episodes = 10;
  r.suboptimality = value;
  return r;
}

}  // namespace

TEST_CASE("default episode grid") {
  const auto grid = default_k_grid();
  CHECK(grid.size() == 20);
  CHECK(grid.front() == 5);
  CHECK(grid.back() == 1000);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
}

TEST_CASE("config defaults") {
  const ExperimentConfig config = parse_config("{}");
  CHECK(config.instance.kind == InstanceKind::kSynthetic);
  CHECK(config.algorithms == std::vector<std::string>{"VAPVI", "PEVI", "LSVI", "VAVI"});
  CHECK(config.k_grid == default_k_grid());
  CHECK(config.trials == 50);
  CHECK(config.horizons == std::vector<int>{20});
  CHECK(config.lambda == 0.01);
  CHECK(config.c == 1.0);
  CHECK(config.split == SplitMode::kHalf);
  CHECK(config.higher_order);
  CHECK(config.variance_offset == 0);
  CHECK_FALSE(config.record_timing);
}

TEST_CASE("config round-trips through its description") {
  const ExperimentConfig config = small_config();
  const std::string described = describe_config(config);
  // The description carries informational notes the parser does not accept.
  CHECK_THROWS_AS(parse_config(described), ConfigError);
  CHECK(described.find("\"notes\"") != std::string::npos);
}

TEST_CASE("invalid configs are rejected") {
  CHECK_THROWS_AS(parse_config("{\"bogus\": 1}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"instance\": {\"type\": \"synthetic\", \"d\": 3}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"instance\": {\"type\": \"circle\"}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"trials\": 0}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"k_grid\": []}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"k_grid\": [0]}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"horizons\": []}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"lambda\": 0}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"C\": -1}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"split_mode\": \"thirds\"}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"variance_offset\": 2}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"algorithms\": [\"FQI\"]}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"trials\": \"many\"}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("algorithm table") {
  CHECK(algorithm_by_name("VAPVI", 1.0, true).bonus.kind == BonusKind::kVapvi);
  CHECK(algorithm_by_name("VAPVI", 1.0, true).weighting == Weighting::kVariance);
  CHECK(algorithm_by_name("VAPVI-I", 1.0, true).bonus.kind == BonusKind::kVapviImproved);
  CHECK(algorithm_by_name("PEVI", 2.0, true).bonus.c == 2.0);
  CHECK(algorithm_by_name("PEVI", 1.0, true).weighting == Weighting::kUnit);
  CHECK(algorithm_by_name("LSVI", 1.0, true).bonus.kind == BonusKind::kNone);
  CHECK(algorithm_by_name("VAVI", 1.0, false).weighting == Weighting::kVariance);
  CHECK_THROWS_AS(algorithm_by_name("vapvi", 1.0, true), ConfigError);
}

TEST_CASE("one trial and one episode count give one row per algorithm") {
  auto config = parse_config(R"({"k_grid": [5], "trials": 1, "horizons": [3], "split_mode": "none"})");
  const auto rows = run(config);
  CHECK(rows.size() == config.algorithms.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].algorithm == config.algorithms[i]);
}

TEST_CASE("rows are ordered and paired") {
  const ExperimentConfig config = small_config();
  const auto rows = run(config);
  CHECK(rows.size() == 2 * 2 * 3 * 5);
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < rows.size(); i += 5) {
    for (std::size_t a = 0; a < 5; ++a) {
      CHECK(rows[i + a].seed == rows[i].seed);
      CHECK(rows[i + a].trial == rows[i].trial);
      CHECK(rows[i + a].suboptimality >= -1e-10);
      CHECK(rows[i + a].wall_ms == 0);
    }
    CHECK(rows[i].seed == child_seed(5, rows[i].horizon, rows[i].episodes, rows[i].trial));
    seeds.insert(rows[i].seed);
  }
  CHECK(seeds.size() == rows.size() / 5);
}

TEST_CASE("results do not depend on the worker count") {
  const ExperimentConfig config = small_config();
  const std::string serial = csv_of(run(config, 1));
  CHECK(serial == csv_of(run(config, 1)));
  CHECK(serial == csv_of(run(config, 3)));
  CHECK(serial == csv_of(run(config, 8)));
}

TEST_CASE("master seed changes the draws") {
  auto config = small_config();
  const std::string a = csv_of(run(config));
  config.master_seed = 6;
  CHECK(a != csv_of(run(config)));
}

TEST_CASE("hard and tabular instances run") {
  auto hard = parse_config(R"({"instance": {"type": "hard", "d": 5, "u_seed": 2},
                               "algorithms": ["VAPVI", "PEVI", "LSVI", "VAVI"],
                               "k_grid": [10], "trials": 2, "horizons": [3]})");
  for (const auto& r : run(hard)) CHECK(r.suboptimality >= -1e-10);
  auto tab = parse_config(R"({"instance": {"type": "tabular", "states": 3, "actions": 2, "seed": 4},
                              "algorithms": ["VAPVI", "VAPVI-I", "LSVI"],
                              "k_grid": [10], "trials": 2, "horizons": [2]})");
  CHECK(run(tab).size() == 6);
}

TEST_CASE("instances can be loaded from JSON files") {
  const std::string path = "test_experiment_instance.json";
  save_linear_mdp(build_environment(parse_config(R"({"instance": {"type": "tabular"}})").instance, 2).mdp, path);
  auto config = parse_config(R"({"instance": {"type": "json", "path": "test_experiment_instance.json"},
                                 "k_grid": [8], "trials": 1, "horizons": [2]})");
  CHECK(run(config).size() == 4);
  config.horizons = {3};
  CHECK_THROWS_AS(run(config), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("results CSV round-trips and rejects malformed rows") {
  const auto rows = run(parse_config(R"({"k_grid": [5], "trials": 2, "horizons": [2]})"));
  std::istringstream in(csv_of(rows));
  const auto back = read_results(in);
  CHECK(csv_of(back) == csv_of(rows));

  std::istringstream bad_header("algo,H\n");
  CHECK_THROWS_AS(read_results(bad_header), ConfigError);
  std::istringstream short_row(std::string(kResultHeader) + "\nVAPVI,20,5\n");
  CHECK_THROWS_AS(read_results(short_row), ConfigError);
  std::istringstream bad_number(std::string(kResultHeader) + "\nVAPVI,20,5,0,1,0.5x,0\n");
  CHECK_THROWS_AS(read_results(bad_number), ConfigError);
}

TEST_CASE("summary statistics") {
  const auto single = summarize({row("VAPVI", 0.75)});
  REQUIRE(single.size() == 1);
  CHECK(single[0].mean == 0.75);
  CHECK(single[0].stddev == 0.0);
  CHECK(single[0].count == 1);

  const auto pair = summarize({row("PEVI", 1.0), row("PEVI", 3.0), row("LSVI", 4.0)});
  REQUIRE(pair.size() == 2);
  CHECK(pair[0].algorithm == "LSVI");
  CHECK(pair[1].mean == 2.0);
  CHECK(pair[1].stddev == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  std::ostringstream out;
  write_summary(pair, out);
  CHECK(out.str().rfind("algorithm,H,K,n,mean,std\n", 0) == 0);
}

TEST_CASE("timing can be recorded") {
  auto config = parse_config(R"({"k_grid": [5], "trials": 1, "horizons": [2], "record_timing": true})");
  for (const auto& r : run(config)) CHECK(r.wall_ms >= 0);
}
