#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "vacal/dataset.hpp"

namespace vacal {

class Rng;

struct TreeParams {
  std::optional<int> max_depth;  // nullopt: grow until pure or minimum-size limits
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  // Features examined per split; 0 means all. Used by the forest.
  std::size_t max_features = 0;
};

/// Node of a fitted tree. Training counts are kept on every node so that a
/// truncated tree can score collapsed subtrees by their pooled fraction.
struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int depth = 0;
  std::size_t n_samples = 0;
  std::size_t n_positive = 0;

  bool is_leaf() const { return feature < 0; }
  double score() const { return static_cast<double>(n_positive) / static_cast<double>(n_samples); }
};

/// CART classification tree with Gini impurity and midpoint thresholds.
/// Instances with x[feature] <= threshold go left. Among equally good splits
/// the lowest feature index wins, then the lowest threshold.
class DecisionTree {
 public:
  static DecisionTree fit(const FeatureMatrix& x, std::span<const int> y, const TreeParams& params = {});

  /// Fits on the given rows; duplicates act as integer sample weights
  /// (bootstrap samples). rng drives feature subsampling when
  /// params.max_features is set and may be null otherwise.
  static DecisionTree fit_rows(const FeatureMatrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                               const TreeParams& params, Rng* rng);

  /// Positive fraction of the leaf x falls in. Throws std::invalid_argument
  /// on a dimension mismatch.
  double score(std::span<const double> x) const;
  std::size_t leaf_index(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t n_features() const { return n_features_; }
  int depth() const;
  std::size_t leaf_count() const;

  /// Copy in which every node at depth max_depth becomes a leaf.
  DecisionTree truncated(int max_depth) const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

}  // namespace vacal
