#include "vacal/venn_tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace vacal {

VennTree::VennTree(DecisionTree tree, std::vector<std::optional<LeafAnnotation>> annotations)
    : tree_(std::move(tree)), annotations_(std::move(annotations)) {
  if (annotations_.size() != tree_.nodes().size()) {
    throw std::invalid_argument("venn tree: one annotation slot per node required");
  }
  for (std::size_t i = 0; i < annotations_.size(); ++i) {
    if (tree_.nodes()[i].is_leaf() != annotations_[i].has_value()) {
      throw std::invalid_argument("venn tree: exactly the leaves must be annotated");
    }
  }
}

const LeafAnnotation& VennTree::leaf(std::size_t node) const {
  if (node >= annotations_.size() || !annotations_[node]) {
    throw std::out_of_range(fmt::format("venn tree: node {} is not a leaf", node));
  }
  return *annotations_[node];
}

namespace {

std::string feature_label(std::span<const std::string> names, std::size_t feature) {
  return feature < names.size() ? names[feature] : fmt::format("x[{}]", feature);
}

// 14.35 rather than 14.350000000000001.
std::string threshold_text(double t) { return fmt::format("{:.10g}", t); }

// Probability of the predicted class: [1-p1, 1-p0] for class 0.
std::pair<double, double> class_interval(int predicted_class, const ProbabilityInterval& iv) {
  if (predicted_class == 1) return {iv.p0, iv.p1};
  return {1.0 - iv.p1, 1.0 - iv.p0};
}

}  // namespace

nlohmann::json VennTree::to_json(std::span<const std::string> feature_names) const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < tree_.nodes().size(); ++i) {
    const auto& n = tree_.nodes()[i];
    nlohmann::json node{{"id", i}, {"depth", n.depth}, {"n_samples", n.n_samples}, {"n_positive", n.n_positive}};
    if (n.is_leaf()) {
      const auto& a = *annotations_[i];
      node["leaf"] = {{"score", a.score},
                      {"p0", a.interval.p0},
                      {"p1", a.interval.p1},
                      {"point", a.interval.point},
                      {"predicted_class", a.predicted_class},
                      {"n_calibration", a.n_calibration}};
    } else {
      node["feature"] = feature_label(feature_names, static_cast<std::size_t>(n.feature));
      node["threshold"] = n.threshold;
      node["left"] = n.left;
      node["right"] = n.right;
    }
    nodes.push_back(std::move(node));
  }
  return {{"nodes", std::move(nodes)}};
}

VennTree build_venn_tree(const DecisionTree& tree, const VennAbersCalibrator& calibrator,
                         std::optional<int> display_max_depth) {
  DecisionTree shown = display_max_depth ? tree.truncated(*display_max_depth) : tree;
  std::vector<std::optional<LeafAnnotation>> annotations(shown.nodes().size());
  for (std::size_t i = 0; i < shown.nodes().size(); ++i) {
    const auto& node = shown.nodes()[i];
    if (!node.is_leaf()) continue;
    LeafAnnotation a;
    a.score = node.score();
    a.interval = calibrator.interval(a.score);
    a.predicted_class = a.interval.point >= 0.5 ? 1 : 0;
    annotations[i] = a;
  }
  return VennTree(std::move(shown), std::move(annotations));
}

VennTree build_venn_tree(const DecisionTree& tree, const FeatureMatrix& calibration_x,
                         std::span<const int> calibration_y, std::optional<int> display_max_depth) {
  if (calibration_x.cols() != tree.n_features()) {
    throw std::invalid_argument(fmt::format("venn tree: calibration data has {} features, tree expects {}",
                                            calibration_x.cols(), tree.n_features()));
  }
  if (calibration_x.rows() != calibration_y.size()) {
    throw std::invalid_argument("venn tree: calibration rows and labels differ in length");
  }
  std::vector<double> scores(calibration_x.rows());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = tree.score(calibration_x.row(i));
  VennTree vt = build_venn_tree(tree, VennAbersCalibrator(scores, calibration_y), display_max_depth);

  std::vector<std::size_t> counts(vt.tree().nodes().size(), 0);
  for (std::size_t i = 0; i < calibration_x.rows(); ++i) ++counts[vt.route(calibration_x.row(i))];
  std::vector<std::optional<LeafAnnotation>> annotations(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!vt.tree().nodes()[i].is_leaf()) continue;
    annotations[i] = vt.leaf(i);
    annotations[i]->n_calibration = counts[i];
  }
  return VennTree(vt.tree(), std::move(annotations));
}

bool Rule::matches(std::span<const double> x) const {
  return std::all_of(conditions.begin(), conditions.end(), [&](const Condition& c) { return c.holds(x); });
}

std::vector<Rule> extract_rules(const VennTree& vt) {
  std::vector<Rule> rules;
  const auto& nodes = vt.tree().nodes();
  std::vector<Condition> path;

  auto add_condition = [](std::vector<Condition> conditions, Condition c) {
    for (auto& existing : conditions) {
      if (existing.feature == c.feature && existing.comparator == c.comparator) {
        existing.threshold = c.comparator == Comparator::less_equal ? std::min(existing.threshold, c.threshold)
                                                                    : std::max(existing.threshold, c.threshold);
        return conditions;
      }
    }
    conditions.push_back(c);
    return conditions;
  };

  auto walk = [&](auto&& self, std::size_t id, const std::vector<Condition>& conditions) -> void {
    const auto& node = nodes[id];
    if (node.is_leaf()) {
      const auto& a = vt.leaf(id);
      rules.push_back(Rule{id, conditions, a.predicted_class, a.interval});
      return;
    }
    const auto f = static_cast<std::size_t>(node.feature);
    self(self, static_cast<std::size_t>(node.left),
         add_condition(conditions, {f, Comparator::less_equal, node.threshold}));
    self(self, static_cast<std::size_t>(node.right), add_condition(conditions, {f, Comparator::greater, node.threshold}));
  };
  walk(walk, 0, {});
  return rules;
}

std::string format_rules(std::span<const Rule> rules, const RuleFormat& format) {
  std::string out;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const auto& rule = rules[r];
    const std::string number = fmt::format("{})", r + 1);
    const std::string pad(number.size(), ' ');
    if (rule.conditions.empty()) out += fmt::format("{} (all instances)\n", number);
    for (std::size_t c = 0; c < rule.conditions.size(); ++c) {
      const auto& cond = rule.conditions[c];
      out += fmt::format("{} {} {} {} {}\n", c == 0 ? number : pad, c == 0 ? " " : "&",
                         feature_label(format.feature_names, cond.feature),
                         cond.comparator == Comparator::less_equal ? "<=" : ">", threshold_text(cond.threshold));
    }
    const bool positive = rule.predicted_class == 1;
    const auto [lo, hi] = class_interval(rule.predicted_class, rule.interval);
    out += fmt::format("{} -> {} [{:.2f}, {:.2f}]\n\n", pad, positive ? format.positive_class : format.negative_class,
                       lo, hi);
  }
  return out;
}

std::string render_tree(const VennTree& vt, const RenderOptions& options) {
  // HSV hues: orange for no failure, blue for failure.
  constexpr double kHueNegative = 0.083;
  constexpr double kHuePositive = 0.583;
  const auto& nodes = vt.tree().nodes();
  std::string out = "digraph VennTree {\n  node [shape=box, style=\"filled,rounded\", fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) {
      const auto& a = vt.leaf(i);
      const auto [lo, hi] = class_interval(a.predicted_class, a.interval);
      const double saturation = std::clamp(std::abs(a.interval.point - 0.5) / 0.5, 0.0, 1.0);
      const double width =
          options.min_leaf_width + std::clamp(a.interval.width(), 0.0, 1.0) * (options.max_leaf_width - options.min_leaf_width);
      out += fmt::format(
          "  n{} [label=\"{}\\n[{:.2f}, {:.2f}]\\nn={}\", fillcolor=\"{:.3f} {:.3f} 1.000\", width={:.3f}, "
          "fixedsize=true];\n",
          i, a.predicted_class == 1 ? "Failure" : "No Failure", lo, hi, n.n_samples,
          a.predicted_class == 1 ? kHuePositive : kHueNegative, saturation, width);
    } else {
      out += fmt::format("  n{} [label=\"{} <= {}\", fillcolor=\"0.000 0.000 0.950\"];\n", i,
                         feature_label(options.feature_names, static_cast<std::size_t>(n.feature)),
                         threshold_text(n.threshold));
    }
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) continue;
    out += fmt::format("  n{} -> n{} [label=\"yes\"];\n  n{} -> n{} [label=\"no\"];\n", i, n.left, i, n.right);
  }
  out += "}\n";
  return out;
}

}  // namespace vacal
