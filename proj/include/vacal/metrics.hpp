#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vacal {

struct ClassificationMetrics {
  double accuracy = 0.0;
  // Absent when nothing is predicted positive.
  std::optional<double> precision;
  // Absent when there are no positive labels.
  std::optional<double> recall;
  std::size_t positive_predictions = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Thresholded metrics: an instance is predicted positive iff p >= threshold.
ClassificationMetrics classification_metrics(std::span<const double> probabilities, std::span<const int> labels,
                                             double threshold = 0.5);

/// Mann-Whitney AUC: fraction of (positive, negative) pairs ranked correctly,
/// ties counting one half. Computed from midranks in O(n log n). Throws
/// std::invalid_argument unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

enum class BinMode { width, frequency };

BinMode parse_bin_mode(std::string_view text);
std::string_view to_string(BinMode mode);

struct ReliabilityBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
  // Mean predicted class-1 probability in the bin (mop).
  double mean_prediction = 0.0;
  // Fraction of label-1 instances in the bin (foc).
  double fraction_positive = 0.0;
};

/// Bins of the unit interval. Every bin is [low, high) except the last, which
/// is closed at 1.
struct ReliabilityBins {
  std::vector<ReliabilityBin> bins;
  std::size_t n = 0;
};

/// Equal-width bins by default; BinMode::frequency places the inner edges at
/// empirical quantiles so bins hold roughly equal counts (ties stay together).
ReliabilityBins reliability_bins(std::span<const double> probabilities, std::span<const int> labels,
                                 std::size_t n_bins = 10, BinMode mode = BinMode::width);

/// Expected calibration error: sum over bins of (count/n) * |foc - mop|.
/// Throws std::invalid_argument when the bins are empty (n = 0).
double ece(const ReliabilityBins& bins);

/// Instances with p >= 0.5 only (predicted failures).
struct MinoritySubset {
  std::vector<double> probabilities;
  std::vector<int> labels;
};
MinoritySubset minority_predictions(std::span<const double> probabilities, std::span<const int> labels);

/// ECE restricted to instances predicted positive (p >= 0.5); absent if there
/// are none.
std::optional<double> ece_minority(std::span<const double> probabilities, std::span<const int> labels,
                                   std::size_t n_bins = 10, BinMode mode = BinMode::width);

struct EvaluationReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::optional<double> auc;
  std::optional<double> precision;
  std::optional<double> recall;
  std::size_t positive_prediction_count = 0;
  double ece = 0.0;
  std::optional<double> ece1;
  ReliabilityBins reliability;
  ReliabilityBins reliability_minority;
};

EvaluationReport evaluate(std::span<const double> probabilities, std::span<const int> labels,
                          std::span<const double> ranking_scores, std::size_t n_bins = 10,
                          BinMode mode = BinMode::width);

nlohmann::json to_json(const ReliabilityBins& bins);
nlohmann::json to_json(const EvaluationReport& report);

/// `bin_low,bin_high,count,mop,foc` rows with a header line.
std::string reliability_csv(const ReliabilityBins& bins);

}  // namespace vacal
