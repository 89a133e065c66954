#include <doctest.h>

#include <string>
#include <vector>

#include "vacal/calibration.hpp"
#include "vacal/dataset.hpp"
#include "vacal/rng.hpp"
#include "vacal/venn_tree.hpp"

using namespace vacal;

namespace {

struct Problem {
  FeatureMatrix x;
  std::vector<int> y;
};

Problem make_problem(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Problem p{FeatureMatrix(n, 3), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < 3; ++f) p.x(i, f) = std::round(rng.normal() * 4.0) / 4.0;
    p.y[i] = p.x(i, 0) + 0.5 * p.x(i, 2) + 0.8 * rng.normal() > 1.2 ? 1 : 0;
  }
  return p;
}

const std::vector<std::string> kNames{"alpha", "beta", "gamma"};

}  // namespace

TEST_CASE("venn tree: leaf intervals equal the calibrator applied to the leaf score") {
  auto train = make_problem(1, 400);
  auto cal = make_problem(2, 300);
  TreeParams params;
  params.max_depth = 4;
  auto tree = DecisionTree::fit(train.x, train.y, params);
  auto vt = build_venn_tree(tree, cal.x, cal.y);
  std::vector<double> cal_scores;
  for (std::size_t i = 0; i < cal.x.rows(); ++i) cal_scores.push_back(tree.score(cal.x.row(i)));
  VennAbersCalibrator va(cal_scores, cal.y);
  std::size_t counted = 0;
  for (std::size_t node = 0; node < tree.nodes().size(); ++node) {
    if (!tree.nodes()[node].is_leaf()) {
      CHECK_THROWS_AS(vt.leaf(node), std::out_of_range);
      continue;
    }
    const auto& a = vt.leaf(node);
    const auto expected = va.interval(tree.nodes()[node].score());
    CHECK(a.interval.p0 == expected.p0);
    CHECK(a.interval.p1 == expected.p1);
    CHECK(a.predicted_class == (expected.point >= 0.5 ? 1 : 0));
    counted += a.n_calibration;
  }
  CHECK(counted == cal.x.rows());
  CHECK_THROWS_AS(build_venn_tree(tree, FeatureMatrix(2, 2), std::vector<int>{0, 1}), std::invalid_argument);
}

TEST_CASE("venn tree: rules partition the input space and agree with routing") {
  auto train = make_problem(3, 500);
  auto cal = make_problem(4, 300);
  TreeParams params;
  params.max_depth = 5;
  auto vt = build_venn_tree(DecisionTree::fit(train.x, train.y, params), cal.x, cal.y);
  auto rules = extract_rules(vt);
  CHECK(rules.size() == vt.tree().leaf_count());
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x{rng.normal() * 3, rng.normal() * 3, rng.normal() * 3};
    if (trial % 4 == 0) x[0] = vt.tree().nodes()[0].threshold;  // exactly on a split
    std::size_t matched = 0;
    for (const auto& rule : rules) {
      if (rule.matches(x)) {
        ++matched;
        CHECK(rule.leaf == vt.route(x));
        CHECK(rule.interval.p0 == vt.interval(x).p0);
        CHECK(rule.interval.p1 == vt.interval(x).p1);
      }
    }
    CHECK(matched == 1);
  }
  for (const auto& rule : rules) {
    // At most one bound per feature and direction after merging.
    for (std::size_t i = 0; i < rule.conditions.size(); ++i) {
      for (std::size_t j = i + 1; j < rule.conditions.size(); ++j) {
        CHECK_FALSE((rule.conditions[i].feature == rule.conditions[j].feature &&
                     rule.conditions[i].comparator == rule.conditions[j].comparator));
      }
    }
  }
}

TEST_CASE("venn tree: repeated bounds merge to the tightest one") {
  // x <= 6 then x <= 3 on the same path; the rule keeps x <= 3.
  FeatureMatrix x(8, 1, {1, 2, 3, 4, 5, 6, 7, 8});
  std::vector<int> y{0, 0, 0, 1, 1, 1, 0, 0};
  auto tree = DecisionTree::fit(x, y);
  auto vt = build_venn_tree(tree, x, y);
  for (const auto& rule : extract_rules(vt)) {
    std::size_t le = 0, gt = 0;
    for (const auto& c : rule.conditions) (c.comparator == Comparator::less_equal ? le : gt) += 1;
    CHECK(le <= 1);
    CHECK(gt <= 1);
  }
  auto leftmost = extract_rules(vt).front();
  REQUIRE(leftmost.conditions.size() == 1);
  CHECK(leftmost.conditions[0].threshold == 3.5);
  CHECK(leftmost.conditions[0].comparator == Comparator::less_equal);
}

TEST_CASE("venn tree: single-leaf tree") {
  FeatureMatrix x(3, 1, {1, 1, 1});
  std::vector<int> y{0, 1, 1};
  auto vt = build_venn_tree(DecisionTree::fit(x, y), x, y);
  auto rules = extract_rules(vt);
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].conditions.empty());
  CHECK(rules[0].matches(std::vector<double>{42}));
  auto text = format_rules(rules, RuleFormat{{"x"}});
  CHECK(text.find("->") != std::string::npos);
}

TEST_CASE("venn tree: display depth") {
  auto train = make_problem(6, 400);
  auto tree = DecisionTree::fit(train.x, train.y);
  std::vector<double> scores;
  for (std::size_t i = 0; i < train.x.rows(); ++i) scores.push_back(tree.score(train.x.row(i)));
  VennAbersCalibrator va(scores, train.y);
  auto full = build_venn_tree(tree, va);
  auto same = build_venn_tree(tree, va, tree.depth());
  CHECK(full.to_json(kNames) == same.to_json(kNames));
  auto shallow = build_venn_tree(tree, va, 2);
  CHECK(shallow.tree().depth() <= 2);
  for (std::size_t node = 0; node < shallow.tree().nodes().size(); ++node) {
    const auto& n = shallow.tree().nodes()[node];
    if (!n.is_leaf()) continue;
    // Collapsed leaves score as their pooled training fraction.
    CHECK(shallow.leaf(node).score == n.score());
    CHECK(shallow.leaf(node).interval.p0 == va.interval(n.score()).p0);
  }
}

TEST_CASE("venn tree: rule text prints the interval of the predicted class") {
  FeatureMatrix x(6, 1, {1, 2, 3, 4, 5, 6});
  std::vector<int> y{0, 0, 0, 1, 1, 1};
  auto vt = build_venn_tree(DecisionTree::fit(x, y), x, y);
  auto rules = extract_rules(vt);
  REQUIRE(rules.size() == 2);
  auto text = format_rules(rules, RuleFormat{{"torque [Nm]"}});
  CHECK(text.find("torque [Nm] <= 3.5") != std::string::npos);
  CHECK(text.find("torque [Nm] > 3.5") != std::string::npos);
  CHECK(text.find("-> No Failure") != std::string::npos);
  CHECK(text.find("-> Failure") != std::string::npos);
  const auto& no_failure = rules[0].predicted_class == 0 ? rules[0] : rules[1];
  CHECK(no_failure.interval.p0 <= no_failure.interval.p1);
}

TEST_CASE("venn tree: DOT rendering is deterministic and encodes the intervals") {
  auto train = make_problem(7, 300);
  TreeParams params;
  params.max_depth = 3;
  auto vt = build_venn_tree(DecisionTree::fit(train.x, train.y, params), train.x, train.y);
  RenderOptions options{kNames};
  auto a = render_tree(vt, options);
  CHECK(a == render_tree(vt, options));
  CHECK(a.rfind("digraph", 0) == 0);
  CHECK(a.find("fillcolor=\"0.083") != std::string::npos);
  CHECK(a.find("alpha <=") != std::string::npos);
  auto json = vt.to_json(kNames);
  CHECK(json.dump() == vt.to_json(kNames).dump());
}
