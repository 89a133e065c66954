#pragma once

// Independent reference computations used to check the implementations.
// Everything here is deliberately naive.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace oracle {

struct PooledPoint {
  double score;
  double mean_label;
  double weight;
};

inline std::vector<PooledPoint> pool(std::span<const double> scores, std::span<const int> labels) {
  std::map<double, std::pair<double, double>> groups;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    groups[scores[i]].first += labels[i];
    groups[scores[i]].second += 1.0;
  }
  std::vector<PooledPoint> out;
  for (const auto& [s, sw] : groups) out.push_back({s, sw.first / sw.second, sw.second});
  return out;
}

/// Monotone least squares by dynamic programming over candidate levels.
/// The optimal non-decreasing fit only takes values that are weighted means
/// of contiguous runs of points, so restricting the DP to those levels loses
/// nothing. dp[i][c] = best cost of points 0..i with point i at level c.
inline std::vector<double> isotonic_dp(std::span<const double> scores, std::span<const int> labels) {
  const auto pts = pool(scores, labels);
  const std::size_t m = pts.size();
  std::vector<double> levels;
  for (std::size_t a = 0; a < m; ++a) {
    double sum = 0.0, w = 0.0;
    for (std::size_t b = a; b < m; ++b) {
      sum += pts[b].mean_label * pts[b].weight;
      w += pts[b].weight;
      levels.push_back(sum / w);
    }
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const std::size_t L = levels.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> dp(m, std::vector<double>(L, inf));
  std::vector<std::vector<std::size_t>> from(m, std::vector<std::size_t>(L, 0));
  for (std::size_t c = 0; c < L; ++c) {
    const double d = pts[0].mean_label - levels[c];
    dp[0][c] = pts[0].weight * d * d;
  }
  for (std::size_t i = 1; i < m; ++i) {
    double best = inf;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < L; ++c) {
      if (dp[i - 1][c] < best) {
        best = dp[i - 1][c];
        arg = c;
      }
      const double d = pts[i].mean_label - levels[c];
      dp[i][c] = best + pts[i].weight * d * d;
      from[i][c] = arg;
    }
  }
  std::size_t c = static_cast<std::size_t>(std::min_element(dp[m - 1].begin(), dp[m - 1].end()) - dp[m - 1].begin());
  std::vector<double> fitted(m);
  for (std::size_t i = m; i-- > 0;) {
    fitted[i] = levels[c];
    if (i > 0) c = from[i][c];
  }
  return fitted;
}

inline double weighted_sse(std::span<const double> scores, std::span<const int> labels, std::span<const double> fit) {
  const auto pts = pool(scores, labels);
  double sse = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    // Squared error against the individual labels, not the group means.
    const double mean = pts[i].mean_label, w = pts[i].weight;
    const double ones = mean * w;
    sse += ones * (1.0 - fit[i]) * (1.0 - fit[i]) + (w - ones) * fit[i] * fit[i];
  }
  return sse;
}

/// Counts positive-over-negative pairs, ties as 1/2.
inline double auc_pairs(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Exhaustive CART over all (feature, midpoint) candidates, Gini gain in
/// floating point; ties go to the lowest feature, then the lowest threshold.
struct Node {
  int feature = -1;
  double threshold = 0.0;
  std::size_t n = 0, pos = 0;
  std::unique_ptr<Node> left, right;
};

inline double gini(double pos, double n) {
  if (n == 0) return 0.0;
  const double p = pos / n;
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

inline std::unique_ptr<Node> exhaustive_tree(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                             const std::vector<std::size_t>& rows) {
  auto node = std::make_unique<Node>();
  node->n = rows.size();
  for (auto r : rows) node->pos += static_cast<std::size_t>(y[r]);
  if (node->pos == 0 || node->pos == node->n || node->n < 2) return node;
  const std::size_t d = x.empty() ? 0 : x[0].size();
  const double parent = gini(static_cast<double>(node->pos), static_cast<double>(node->n));
  std::optional<double> best_gain;
  int best_f = -1;
  double best_t = 0.0;
  for (std::size_t f = 0; f < d; ++f) {
    std::vector<double> values;
    for (auto r : rows) values.push_back(x[r][f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = (values[k] + values[k + 1]) / 2.0;
      double nl = 0, pl = 0, nr = 0, pr = 0;
      for (auto r : rows) {
        if (x[r][f] <= t) nl += 1, pl += y[r];
        else nr += 1, pr += y[r];
      }
      const double n = static_cast<double>(node->n);
      const double gain = parent - nl / n * gini(pl, nl) - nr / n * gini(pr, nr);
      if (!best_gain || gain > *best_gain + 1e-12) {
        best_gain = gain;
        best_f = static_cast<int>(f);
        best_t = t;
      }
    }
  }
  if (!best_gain) return node;
  node->feature = best_f;
  node->threshold = best_t;
  std::vector<std::size_t> l, r;
  for (auto row : rows) (x[row][static_cast<std::size_t>(best_f)] <= best_t ? l : r).push_back(row);
  node->left = exhaustive_tree(x, y, l);
  node->right = exhaustive_tree(x, y, r);
  return node;
}

/// Platt loss minimised over a dense (a, b) grid followed by local refinement.
struct GridOptimum {
  double a, b, loss;
};

inline double platt_loss(std::span<const double> s, std::span<const int> y, double a, double b) {
  double n_pos = 0;
  for (int v : y) n_pos += v;
  const double n_neg = static_cast<double>(y.size()) - n_pos;
  const double tp = (n_pos + 1) / (n_pos + 2), tn = 1 / (n_neg + 2);
  double loss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = y[i] ? tp : tn;
    const double p = 1.0 / (1.0 + std::exp(a * s[i] + b));
    loss -= t * std::log(p) + (1 - t) * std::log(1 - p);
  }
  return loss;
}

inline GridOptimum platt_grid(std::span<const double> s, std::span<const int> y, double lo, double hi) {
  GridOptimum best{0, 0, std::numeric_limits<double>::infinity()};
  double step = (hi - lo) / 400.0;
  double a_lo = lo, a_hi = hi, b_lo = lo, b_hi = hi;
  for (int round = 0; round < 6; ++round) {
    for (double a = a_lo; a <= a_hi; a += step) {
      for (double b = b_lo; b <= b_hi; b += step) {
        const double l = platt_loss(s, y, a, b);
        if (l < best.loss) best = {a, b, l};
      }
    }
    a_lo = best.a - 2 * step, a_hi = best.a + 2 * step;
    b_lo = best.b - 2 * step, b_hi = best.b + 2 * step;
    step /= 40.0;
  }
  return best;
}

}  // namespace oracle
