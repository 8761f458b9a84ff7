#include "vapvi/dataset.hpp"
#include "vapvi/rng.hpp"

#include <json.hpp>

#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace vapvi {

namespace {

Index sample_index(const auto& probs, double u) {
  double cumulative = 0.0;
  Index last_positive = 0;
  for (Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    cumulative += probs(i);
    last_positive = i;
    if (u < cumulative) return i;
  }
  return last_positive;
}

}  // namespace

Dataset::Dataset(int horizon, Index episodes, std::vector<Transition> records, DatasetMetadata meta)
    : horizon_(horizon), episodes_(episodes), records_(std::move(records)), meta_(std::move(meta)) {
  if (static_cast<Index>(records_.size()) != static_cast<Index>(horizon_) * episodes_) {
    throw std::invalid_argument("dataset must hold exactly H * K transitions");
  }
}

std::span<const Transition> Dataset::step(int h) const {
  if (h < 1 || h > horizon_) throw std::out_of_range("dataset step out of range");
  return {records_.data() + static_cast<std::size_t>(h - 1) * static_cast<std::size_t>(episodes_),
          static_cast<std::size_t>(episodes_)};
}

Dataset Dataset::slice(Index first, Index count) const {
  if (first < 0 || count < 0 || first + count > episodes_) throw std::out_of_range("episode slice out of range");
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(count * horizon_));
  for (int h = 1; h <= horizon_; ++h) {
    const auto slice = step(h).subspan(static_cast<std::size_t>(first), static_cast<std::size_t>(count));
    out.insert(out.end(), slice.begin(), slice.end());
  }
  DatasetMetadata meta = meta_;
  meta.first_episode += first;
  return Dataset(horizon_, count, std::move(out), std::move(meta));
}

Dataset generate(const LinearMDP& mdp, const PolicyTable& behavior, Index episodes, std::uint64_t seed,
                 const std::string& behavior_description) {
  if (episodes < 1) throw std::invalid_argument("episode count must be at least 1");
  behavior.check_against(mdp);
  const int H = mdp.horizon();
  const Index A = mdp.num_actions();
  const double noise = mdp.reward_noise_std();
  const CounterRng rng(seed);

  std::vector<Transition> records(static_cast<std::size_t>(H) * static_cast<std::size_t>(episodes));
  for (Index k = 0; k < episodes; ++k) {
    const auto episode = static_cast<std::uint64_t>(k);
    Index s = sample_index(mdp.initial_dist(), rng.uniform(episode, 0, DrawPurpose::kInitialState));
    for (int h = 1; h <= H; ++h) {
      const auto step = static_cast<std::uint64_t>(h);
      const Index a = sample_index(behavior.step(h).row(s), rng.uniform(episode, step, DrawPurpose::kAction));
      double r = mdp.mean_reward(h, s, a);
      if (noise > 0.0) r += noise * rng.normal(episode, step);
      const Index next =
          sample_index(mdp.transitions(h).row(s * A + a), rng.uniform(episode, step, DrawPurpose::kTransition));
      records[static_cast<std::size_t>(h - 1) * static_cast<std::size_t>(episodes) + static_cast<std::size_t>(k)] =
          Transition{h, s, a, r, next};
      s = next;
    }
  }
  DatasetMetadata meta{seed, instance_hash(mdp), behavior_description, 0};
  return Dataset(H, episodes, std::move(records), std::move(meta));
}

std::pair<Dataset, Dataset> split(const Dataset& data) {
  if (data.episodes() % 2 != 0) throw std::invalid_argument("cannot halve an odd number of episodes");
  const Index half = data.episodes() / 2;
  return {data.slice(0, half), data.slice(half, half)};
}

DataPair make_data_pair(Dataset data, SplitMode mode) {
  if (mode == SplitMode::kNone) {
    auto shared = std::make_shared<const Dataset>(std::move(data));
    return {shared, shared};
  }
  auto [main, variance] = split(data);
  return {std::make_shared<const Dataset>(std::move(main)), std::make_shared<const Dataset>(std::move(variance))};
}

void write_csv(const Dataset& data, std::ostream& out) {
  out << "episode,h,s,a,r,s_next\n";
  for (Index k = 0; k < data.episodes(); ++k) {
    for (int h = 1; h <= data.horizon(); ++h) {
      const Transition& t = data.at(h, k);
      out << k << ',' << h << ',' << t.state << ',' << t.action << ',' << format_double(t.reward) << ','
          << t.next_state << '\n';
    }
  }
}

Dataset read_csv(std::istream& in, const DatasetMetadata& meta) {
  std::string line;
  if (!std::getline(in, line) || line != "episode,h,s,a,r,s_next") {
    throw ConfigError("dataset CSV: missing or wrong header");
  }
  std::map<std::pair<Index, int>, Transition> rows;
  Index max_episode = -1;
  int max_step = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    Index k = 0;
    Transition t;
    char c1, c2, c3, c4, c5;
    if (!(fields >> k >> c1 >> t.step >> c2 >> t.state >> c3 >> t.action >> c4 >> t.reward >> c5 >> t.next_state) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',') {
      throw ConfigError("dataset CSV: malformed row '" + line + "'");
    }
    if (!rows.emplace(std::make_pair(k, t.step), t).second) throw ConfigError("dataset CSV: duplicate row");
    max_episode = std::max(max_episode, k);
    max_step = std::max(max_step, t.step);
  }
  const Index K = max_episode + 1;
  if (K < 1 || static_cast<Index>(rows.size()) != K * max_step) throw ConfigError("dataset CSV: incomplete episodes");
  std::vector<Transition> records;
  records.reserve(rows.size());
  for (int h = 1; h <= max_step; ++h) {
    for (Index k = 0; k < K; ++k) {
      const auto it = rows.find({k, h});
      if (it == rows.end()) throw ConfigError("dataset CSV: missing transition");
      records.push_back(it->second);
    }
  }
  return Dataset(max_step, K, std::move(records), meta);
}

std::string metadata_json(const Dataset& data) {
  nlohmann::ordered_json j;
  j["episodes"] = data.episodes();
  j["horizon"] = data.horizon();
  j["seed"] = data.metadata().seed;
  j["instance_hash"] = data.metadata().instance_hash;
  j["behavior"] = data.metadata().behavior;
  j["first_episode"] = data.metadata().first_episode;
  j["dataset_hash"] = dataset_hash(data);
  return j.dump(2) + "\n";
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::ostringstream out;
  write_csv(data, out);
  return fnv1a(out.str());
}

}  // namespace vapvi
