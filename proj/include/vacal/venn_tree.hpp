#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vacal/calibration.hpp"
#include "vacal/dataset.hpp"
#include "vacal/tree.hpp"

namespace vacal {

struct LeafAnnotation {
  double score = 0.0;  // raw leaf score fed to the calibrator
  ProbabilityInterval interval;
  int predicted_class = 0;  // 1 iff interval.point >= 0.5
  std::size_t n_calibration = 0;
};

/// Decision tree whose leaves carry Venn-Abers intervals. Every instance that
/// reaches a leaf receives that leaf's interval.
class VennTree {
 public:
  VennTree(DecisionTree tree, std::vector<std::optional<LeafAnnotation>> annotations);

  const DecisionTree& tree() const { return tree_; }
  /// Annotation of a leaf node; throws std::out_of_range for internal nodes.
  const LeafAnnotation& leaf(std::size_t node) const;

  std::size_t route(std::span<const double> x) const { return tree_.leaf_index(x); }
  const ProbabilityInterval& interval(std::span<const double> x) const { return leaf(route(x)).interval; }

  nlohmann::json to_json(std::span<const std::string> feature_names) const;

 private:
  DecisionTree tree_;
  std::vector<std::optional<LeafAnnotation>> annotations_;
};

/// Annotates each leaf of `tree` (optionally truncated to display_max_depth
/// first; a collapsed subtree scores as its pooled training positive
/// fraction) with the calibrator's interval for the leaf score.
/// n_calibration is left at 0 by this overload.
VennTree build_venn_tree(const DecisionTree& tree, const VennAbersCalibrator& calibrator,
                         std::optional<int> display_max_depth = std::nullopt);

/// Builds the calibrator from the tree's scores on the calibration set, then
/// annotates as above and records per-leaf calibration counts. Throws
/// std::invalid_argument if the calibration features do not match the tree.
VennTree build_venn_tree(const DecisionTree& tree, const FeatureMatrix& calibration_x,
                         std::span<const int> calibration_y, std::optional<int> display_max_depth = std::nullopt);

enum class Comparator { less_equal, greater };

struct Condition {
  std::size_t feature = 0;
  Comparator comparator = Comparator::less_equal;
  double threshold = 0.0;

  bool holds(std::span<const double> x) const {
    return comparator == Comparator::less_equal ? x[feature] <= threshold : x[feature] > threshold;
  }
};

/// Conjunction of the root-to-leaf conditions, with repeated bounds on the
/// same feature and direction merged to the tightest one.
struct Rule {
  std::size_t leaf = 0;
  std::vector<Condition> conditions;
  int predicted_class = 0;
  ProbabilityInterval interval;

  bool matches(std::span<const double> x) const;
};

std::vector<Rule> extract_rules(const VennTree& vt);

struct RuleFormat {
  std::vector<std::string> feature_names;
  std::string negative_class = "No Failure";
  std::string positive_class = "Failure";
};

/// One block per rule: numbered first condition, `&`-prefixed further
/// conditions, then `-> Class [lo, hi]`. The printed interval is the
/// probability of the predicted class, i.e. [1-p1, 1-p0] for class 0.
std::string format_rules(std::span<const Rule> rules, const RuleFormat& format);

struct RenderOptions {
  std::vector<std::string> feature_names;
  double min_leaf_width = 0.6;  // inches, for a zero-width interval
  double max_leaf_width = 3.0;  // inches, for the interval [0, 1]
};

/// Graphviz DOT document. Leaf fill hue encodes the predicted class (blue:
/// failure, orange: no failure), saturation scales linearly with
/// |point - 0.5| / 0.5 and node width linearly with p1 - p0.
std::string render_tree(const VennTree& vt, const RenderOptions& options);

}  // namespace vacal
