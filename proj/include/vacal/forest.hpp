#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "vacal/tree.hpp"

namespace vacal {

struct ForestParams {
  std::size_t n_trees = 100;
  // 0 selects ceil(sqrt(n_features)).
  std::size_t max_features = 0;
  bool bootstrap = true;
  TreeParams tree;
  // Worker threads for tree training; results do not depend on it.
  std::size_t threads = 1;
};

/// Bagged ensemble of randomised CART trees. Each tree sees a bootstrap
/// sample and a fresh random feature subset at every split; tree t draws from
/// the stream derive_seed(seed, t). The score is the mean of the tree scores.
class RandomForest {
 public:
  static RandomForest fit(const FeatureMatrix& x, std::span<const int> y, const ForestParams& params,
                          std::uint64_t seed);

  double score(std::span<const double> x) const;

  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t max_features() const { return max_features_; }

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  std::vector<DecisionTree> trees_;
  std::size_t max_features_ = 0;
};

}  // namespace vacal
