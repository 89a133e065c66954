#include "vacal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace vacal {

namespace {

void check_lengths(std::span<const double> p, std::span<const int> y, const char* who) {
  if (p.size() != y.size()) throw std::invalid_argument(std::string(who) + ": length mismatch");
}

}  // namespace

ClassificationMetrics classification_metrics(std::span<const double> probabilities, std::span<const int> labels,
                                             double threshold) {
  check_lengths(probabilities, labels, "classification_metrics");
  if (probabilities.empty()) throw std::invalid_argument("classification_metrics: empty input");
  ClassificationMetrics m;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++m.tp;
    else if (predicted) ++m.fp;
    else if (actual) ++m.fn;
    else ++m.tn;
  }
  m.positive_predictions = m.tp + m.fp;
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(probabilities.size());
  if (m.positive_predictions > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.positive_predictions);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  return m;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of positive midranks (1-based); each tie group shares its mean rank.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      pos_in_group += labels[order[j]] == 1;
      ++j;
    }
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    rank_sum += midrank * static_cast<double>(pos_in_group);
    n_pos += pos_in_group;
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: both classes must be present");
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

BinMode parse_bin_mode(std::string_view text) {
  if (text == "width") return BinMode::width;
  if (text == "frequency") return BinMode::frequency;
  throw std::invalid_argument(fmt::format("unknown bin mode '{}' (expected width or frequency)", text));
}

std::string_view to_string(BinMode mode) { return mode == BinMode::width ? "width" : "frequency"; }

ReliabilityBins reliability_bins(std::span<const double> probabilities, std::span<const int> labels,
                                 std::size_t n_bins, BinMode mode) {
  check_lengths(probabilities, labels, "reliability_bins");
  if (n_bins < 1) throw std::invalid_argument("reliability_bins: need at least one bin");

  std::vector<double> edges(n_bins + 1);
  if (mode == BinMode::width) {
    for (std::size_t m = 0; m <= n_bins; ++m) edges[m] = static_cast<double>(m) / static_cast<double>(n_bins);
  } else {
    std::vector<double> sorted(probabilities.begin(), probabilities.end());
    std::sort(sorted.begin(), sorted.end());
    edges.front() = 0.0;
    edges.back() = 1.0;
    for (std::size_t m = 1; m < n_bins; ++m) {
      edges[m] = sorted.empty() ? static_cast<double>(m) / static_cast<double>(n_bins)
                                : sorted[m * sorted.size() / n_bins];
      edges[m] = std::clamp(edges[m], edges[m - 1], 1.0);
    }
  }

  ReliabilityBins out;
  out.bins.resize(n_bins);
  std::vector<double> prob_sum(n_bins, 0.0), pos_sum(n_bins, 0.0);
  for (std::size_t m = 0; m < n_bins; ++m) {
    out.bins[m].low = edges[m];
    out.bins[m].high = edges[m + 1];
  }
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("reliability_bins: probability outside [0, 1]");
    // Last bin whose lower edge is <= p; p = 1 lands in the closed last bin.
    const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, p);
    const auto m = static_cast<std::size_t>(it - (edges.begin() + 1));
    ++out.bins[m].count;
    prob_sum[m] += p;
    pos_sum[m] += labels[i] == 1;
  }
  for (std::size_t m = 0; m < n_bins; ++m) {
    auto& b = out.bins[m];
    if (b.count > 0) {
      b.mean_prediction = prob_sum[m] / static_cast<double>(b.count);
      b.fraction_positive = pos_sum[m] / static_cast<double>(b.count);
    }
  }
  out.n = probabilities.size();
  return out;
}

double ece(const ReliabilityBins& bins) {
  if (bins.n == 0) throw std::invalid_argument("ece: no instances");
  double total = 0.0;
  for (const auto& b : bins.bins) {
    if (b.count == 0) continue;
    total += static_cast<double>(b.count) / static_cast<double>(bins.n) *
             std::abs(b.fraction_positive - b.mean_prediction);
  }
  return total;
}

MinoritySubset minority_predictions(std::span<const double> probabilities, std::span<const int> labels) {
  check_lengths(probabilities, labels, "minority_predictions");
  MinoritySubset subset;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] >= 0.5) {
      subset.probabilities.push_back(probabilities[i]);
      subset.labels.push_back(labels[i]);
    }
  }
  return subset;
}

std::optional<double> ece_minority(std::span<const double> probabilities, std::span<const int> labels,
                                   std::size_t n_bins, BinMode mode) {
  auto subset = minority_predictions(probabilities, labels);
  if (subset.probabilities.empty()) return std::nullopt;
  return ece(reliability_bins(subset.probabilities, subset.labels, n_bins, mode));
}

EvaluationReport evaluate(std::span<const double> probabilities, std::span<const int> labels,
                          std::span<const double> ranking_scores, std::size_t n_bins, BinMode mode) {
  const auto cm = classification_metrics(probabilities, labels);
  EvaluationReport r;
  r.n = probabilities.size();
  r.accuracy = cm.accuracy;
  r.precision = cm.precision;
  r.recall = cm.recall;
  r.positive_prediction_count = cm.positive_predictions;
  const bool both_classes = cm.tp + cm.fn > 0 && cm.tn + cm.fp > 0;
  if (both_classes) r.auc = auc(ranking_scores, labels);
  r.reliability = reliability_bins(probabilities, labels, n_bins, mode);
  r.ece = ece(r.reliability);
  auto subset = minority_predictions(probabilities, labels);
  r.reliability_minority = reliability_bins(subset.probabilities, subset.labels, n_bins, mode);
  if (!subset.probabilities.empty()) r.ece1 = ece(r.reliability_minority);
  return r;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

}  // namespace

nlohmann::json to_json(const ReliabilityBins& bins) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : bins.bins) {
    arr.push_back({{"bin_low", b.low},
                   {"bin_high", b.high},
                   {"count", b.count},
                   {"mop", b.mean_prediction},
                   {"foc", b.fraction_positive}});
  }
  return {{"n", bins.n}, {"bins", std::move(arr)}};
}

nlohmann::json to_json(const EvaluationReport& r) {
  return {{"n", r.n},
          {"accuracy", r.accuracy},
          {"auc", optional_json(r.auc)},
          {"precision", optional_json(r.precision)},
          {"recall", optional_json(r.recall)},
          {"positive_prediction_count", r.positive_prediction_count},
          {"ece", r.ece},
          {"ece1", optional_json(r.ece1)},
          {"reliability", to_json(r.reliability)},
          {"reliability_minority", to_json(r.reliability_minority)}};
}

std::string reliability_csv(const ReliabilityBins& bins) {
  std::string out = "bin_low,bin_high,count,mop,foc\n";
  for (const auto& b : bins.bins) {
    out += fmt::format("{},{},{},{},{}\n", b.low, b.high, b.count, b.mean_prediction, b.fraction_positive);
  }
  return out;
}

}  // namespace vacal
