#include "vacal/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "vacal/error.hpp"
#include "vacal/rng.hpp"

namespace vacal {

RandomForest RandomForest::fit(const FeatureMatrix& x, std::span<const int> y, const ForestParams& params,
                               std::uint64_t seed) {
  if (params.n_trees < 1) throw std::invalid_argument("random forest: n_trees must be at least 1");
  if (x.rows() == 0) throw std::invalid_argument("random forest: no training instances");
  const std::size_t d = x.cols();
  std::size_t max_features = params.max_features;
  if (max_features == 0) max_features = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  if (max_features < 1 || max_features > d) {
    throw std::invalid_argument("random forest: max_features must lie in [1, n_features]");
  }

  RandomForest forest;
  forest.max_features_ = max_features;
  forest.trees_.resize(params.n_trees);

  TreeParams tree_params = params.tree;
  tree_params.max_features = max_features;
  const std::size_t n = x.rows();

  auto train = [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = rng.index(n);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    forest.trees_[t] = DecisionTree::fit_rows(x, y, rows, tree_params, &rng);
  };

  const std::size_t workers = std::clamp<std::size_t>(params.threads, 1, params.n_trees);
  if (workers == 1) {
    for (std::size_t t = 0; t < params.n_trees; ++t) train(t);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < params.n_trees; t += workers) train(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  return forest;
}

double RandomForest::score(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& tree : trees_) sum += tree.score(x);
  return sum / static_cast<double>(trees_.size());
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"type", "random_forest"}, {"max_features", max_features_}, {"trees", std::move(trees)}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  if (j.at("type").get<std::string>() != "random_forest") throw SchemaError("model JSON is not a random forest");
  RandomForest forest;
  forest.max_features_ = j.at("max_features").get<std::size_t>();
  for (const auto& t : j.at("trees")) forest.trees_.push_back(DecisionTree::from_json(t));
  if (forest.trees_.empty()) throw ValidationError("random forest JSON has no trees");
  return forest;
}

}  // namespace vacal
