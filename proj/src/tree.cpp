#include "vacal/tree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

#include "vacal/error.hpp"
#include "vacal/rng.hpp"

namespace vacal {

namespace {

// Weighted child impurity of a binary split, up to the constant factor 2:
//   pos_l*neg_l/n_l + pos_r*neg_r/n_r  =  num / den.
// Kept as an integer fraction so candidate splits compare exactly.
struct SplitCost {
  __int128 num = 0;
  __int128 den = 1;

  static SplitCost of(std::size_t pos_l, std::size_t n_l, std::size_t pos_r, std::size_t n_r) {
    const auto pl = static_cast<__int128>(pos_l), nl = static_cast<__int128>(n_l);
    const auto pr = static_cast<__int128>(pos_r), nr = static_cast<__int128>(n_r);
    return {pl * (nl - pl) * nr + pr * (nr - pr) * nl, nl * nr};
  }

  bool operator<(const SplitCost& other) const { return num * other.den < other.num * den; }
};

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  SplitCost cost;
};

class Builder {
 public:
  Builder(const FeatureMatrix& x, std::span<const int> y, const TreeParams& params, Rng* rng)
      : x_(x), y_(y), params_(params), rng_(rng) {
    features_.resize(x.cols());
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    nodes_.clear();
    grow(0, rows_.size(), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    TreeNode node;
    node.depth = depth;
    node.n_samples = end - begin;
    for (std::size_t i = begin; i < end; ++i) node.n_positive += static_cast<std::size_t>(y_[rows_[i]]);

    const bool stop = node.n_positive == 0 || node.n_positive == node.n_samples ||
                      node.n_samples < params_.min_samples_split ||
                      node.n_samples < 2 * params_.min_samples_leaf ||
                      (params_.max_depth && depth >= *params_.max_depth);
    if (!stop) {
      if (auto best = best_split(begin, end, node.n_positive)) {
        auto middle = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                     rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t r) {
                                       return x_(r, static_cast<std::size_t>(best->feature)) <= best->threshold;
                                     });
        const auto mid = static_cast<std::size_t>(middle - rows_.begin());
        node.feature = best->feature;
        node.threshold = best->threshold;
        nodes_[static_cast<std::size_t>(id)] = node;
        const int left = grow(begin, mid, depth + 1);
        const int right = grow(mid, end, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
      }
    }
    nodes_[static_cast<std::size_t>(id)] = node;
    return id;
  }

  bool is_constant(std::size_t feature, std::size_t begin, std::size_t end) const {
    const double first = x_(rows_[begin], feature);
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (x_(rows_[i], feature) != first) return false;
    }
    return true;
  }

  // Features to examine at this node: all of them, or (forest mode) a random
  // draw that keeps going past constant features until max_features usable
  // ones are found. Returned in ascending order so ties resolve by index.
  std::vector<std::size_t> candidate_features(std::size_t begin, std::size_t end) {
    std::vector<std::size_t> chosen;
    const std::size_t d = features_.size();
    if (params_.max_features == 0 || params_.max_features >= d || rng_ == nullptr) {
      for (std::size_t f = 0; f < d; ++f) {
        if (!is_constant(f, begin, end)) chosen.push_back(f);
      }
      return chosen;
    }
    std::vector<std::size_t> order = features_;
    for (std::size_t i = 0; i < d && chosen.size() < params_.max_features; ++i) {
      const std::size_t j = i + rng_->index(d - i);
      std::swap(order[i], order[j]);
      if (!is_constant(order[i], begin, end)) chosen.push_back(order[i]);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  std::optional<Candidate> best_split(std::size_t begin, std::size_t end, std::size_t n_positive) {
    std::optional<Candidate> best;
    const std::size_t n = end - begin;
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);
    for (std::size_t f : candidate_features(begin, end)) {
      buffer_.clear();
      for (std::size_t i = begin; i < end; ++i) buffer_.emplace_back(x_(rows_[i], f), y_[rows_[i]]);
      std::sort(buffer_.begin(), buffer_.end());
      std::size_t pos_left = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        pos_left += static_cast<std::size_t>(buffer_[i].second);
        const double lo = buffer_[i].first;
        const double hi = buffer_[i + 1].first;
        if (!(lo < hi)) continue;
        const std::size_t n_left = i + 1;
        if (n_left < min_leaf || n - n_left < min_leaf) continue;
        const SplitCost cost = SplitCost::of(pos_left, n_left, n_positive - pos_left, n - n_left);
        if (!best || cost < best->cost) {
          double threshold = lo + (hi - lo) / 2.0;
          if (threshold >= hi) threshold = lo;
          best = Candidate{static_cast<int>(f), threshold, cost};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  const TreeParams& params_;
  Rng* rng_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<double, int>> buffer_;
};

}  // namespace

DecisionTree DecisionTree::fit(const FeatureMatrix& x, std::span<const int> y, const TreeParams& params) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return fit_rows(x, y, rows, params, nullptr);
}

DecisionTree DecisionTree::fit_rows(const FeatureMatrix& x, std::span<const int> y,
                                    std::span<const std::size_t> rows, const TreeParams& params, Rng* rng) {
  if (rows.empty()) throw std::invalid_argument("decision tree: no training instances");
  if (x.rows() != y.size()) throw std::invalid_argument("decision tree: feature rows and label count differ");
  if (x.cols() == 0) throw std::invalid_argument("decision tree: no features");
  for (std::size_t r : rows) {
    if (r >= x.rows()) throw std::out_of_range("decision tree: row index out of range");
    if (y[r] != 0 && y[r] != 1) throw ValidationError("decision tree: labels must be 0 or 1");
  }
  DecisionTree tree;
  tree.n_features_ = x.cols();
  Builder builder(x, y, params, rng);
  tree.nodes_ = builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
  return tree;
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw std::invalid_argument(
        fmt::format("decision tree: expected {} features, got {}", n_features_, x.size()));
  }
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const auto& node = nodes_[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                               : node.right);
  }
  return id;
}

double DecisionTree::score(std::span<const double> x) const { return nodes_[leaf_index(x)].score(); }

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& node : nodes_) d = std::max(d, node.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_leaf(); }));
}

DecisionTree DecisionTree::truncated(int max_depth) const {
  if (max_depth < 0) throw std::invalid_argument("decision tree: truncation depth must be non-negative");
  DecisionTree out;
  out.n_features_ = n_features_;
  // Pre-order copy keeps the parent-before-children layout of fit().
  auto copy = [&](auto&& self, std::size_t id) -> int {
    const int new_id = static_cast<int>(out.nodes_.size());
    TreeNode node = nodes_[id];
    out.nodes_.push_back(node);
    if (node.is_leaf() || node.depth >= max_depth) {
      auto& leaf = out.nodes_[static_cast<std::size_t>(new_id)];
      leaf.feature = -1;
      leaf.threshold = 0.0;
      leaf.left = leaf.right = -1;
      return new_id;
    }
    const int left = self(self, static_cast<std::size_t>(node.left));
    const int right = self(self, static_cast<std::size_t>(node.right));
    out.nodes_[static_cast<std::size_t>(new_id)].left = left;
    out.nodes_[static_cast<std::size_t>(new_id)].right = right;
    return new_id;
  };
  copy(copy, 0);
  return out;
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"depth", n.depth},
                     {"n_samples", n.n_samples},
                     {"n_positive", n.n_positive}});
  }
  return {{"type", "decision_tree"}, {"n_features", n_features_}, {"nodes", std::move(nodes)}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  if (j.at("type").get<std::string>() != "decision_tree") {
    throw SchemaError("model JSON is not a decision tree");
  }
  DecisionTree tree;
  tree.n_features_ = j.at("n_features").get<std::size_t>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.depth = n.at("depth").get<int>();
    node.n_samples = n.at("n_samples").get<std::size_t>();
    node.n_positive = n.at("n_positive").get<std::size_t>();
    tree.nodes_.push_back(node);
  }
  const auto count = static_cast<int>(tree.nodes_.size());
  if (count == 0) throw ValidationError("decision tree JSON has no nodes");
  for (int i = 0; i < count; ++i) {
    const auto& node = tree.nodes_[static_cast<std::size_t>(i)];
    if (node.n_samples == 0 || node.n_positive > node.n_samples) {
      throw ValidationError("decision tree JSON: invalid node counts");
    }
    if (!node.is_leaf() && (node.left <= i || node.left >= count || node.right <= i || node.right >= count ||
                            static_cast<std::size_t>(node.feature) >= tree.n_features_)) {
      throw ValidationError("decision tree JSON: invalid child or feature reference");
    }
  }
  return tree;
}

}  // namespace vacal
