#pragma once

#include "vapvi/linear_mdp.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vapvi {

struct Transition {
  int step = 0;
  Index state = 0;
  Index action = 0;
  double reward = 0.0;
  Index next_state = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct DatasetMetadata {
  std::uint64_t seed = 0;
  std::uint64_t instance_hash = 0;
  std::string behavior;
  /// Index of this dataset's first episode within the rollout it came from.
  Index first_episode = 0;
};

/// K episodes of H transitions each, stored step-major so that a step slice
/// is contiguous and ordered by episode index.
class Dataset {
 public:
  Dataset() = default;
  Dataset(int horizon, Index episodes, std::vector<Transition> records, DatasetMetadata meta);

  int horizon() const { return horizon_; }
  Index episodes() const { return episodes_; }
  const DatasetMetadata& metadata() const { return meta_; }
  const std::vector<Transition>& records() const { return records_; }

  /// All K transitions of step h (1-based), ordered by episode.
  std::span<const Transition> step(int h) const;
  const Transition& at(int h, Index episode) const { return step(h)[static_cast<std::size_t>(episode)]; }

  /// Episodes [first, first + count) as a new dataset.
  Dataset slice(Index first, Index count) const;

 private:
  int horizon_ = 0;
  Index episodes_ = 0;
  std::vector<Transition> records_;
  DatasetMetadata meta_;
};

/// Rolls out K episodes of `behavior` on `mdp`. Bit-identical for equal inputs.
Dataset generate(const LinearMDP& mdp, const PolicyTable& behavior, Index episodes, std::uint64_t seed,
                 const std::string& behavior_description = "");

enum class SplitMode { kHalf, kNone };

/// D feeds the Bellman regression, D' feeds the variance regressions.
/// In kNone mode both point at the same dataset.
struct DataPair {
  std::shared_ptr<const Dataset> main;
  std::shared_ptr<const Dataset> variance;
};

/// First half of the episodes -> D, second half -> D'. Odd K is rejected.
std::pair<Dataset, Dataset> split(const Dataset& data);
DataPair make_data_pair(Dataset data, SplitMode mode);

/// CSV with header `episode,h,s,a,r,s_next`, episode-major row order.
void write_csv(const Dataset& data, std::ostream& out);
Dataset read_csv(std::istream& in, const DatasetMetadata& meta = {});
std::string metadata_json(const Dataset& data);

std::uint64_t dataset_hash(const Dataset& data);

}  // namespace vapvi
