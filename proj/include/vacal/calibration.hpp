#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vacal {

/// Non-decreasing step function fitted by pool-adjacent-violators.
///
/// `breakpoints` are the distinct training scores in ascending order,
/// `weights` the number of training instances sharing each score, and
/// `fitted_values` the least-squares non-decreasing fit at each breakpoint:
/// it minimises sum_i weights[i] * (g[i] - mean_label[i])^2 subject to
/// g[0] <= g[1] <= ... .
struct IsotonicFit {
  std::vector<double> breakpoints;
  std::vector<double> fitted_values;
  std::vector<double> weights;

  /// Value of the greatest breakpoint <= s; clamps to the end values outside
  /// the breakpoint range.
  double operator()(double s) const;
};

/// Isotonic regression of binary labels on scores. Runs in O(n log n).
/// Throws std::invalid_argument on empty or mismatched input or non-finite
/// scores.
IsotonicFit pava(std::span<const double> scores, std::span<const int> labels);

double isotonic_calibrate(const IsotonicFit& fit, double s);

namespace detail {

/// Pool-adjacent-violators over pre-sorted, tie-pooled points given as
/// per-point label sums and weights. Returns the fitted value of each point.
std::vector<double> pava_pooled(std::span<const double> label_sums, std::span<const double> weights);

}  // namespace detail

/// Platt's sigmoid p(s) = 1 / (1 + exp(a*s + b)).
struct PlattFit {
  double a = 0.0;
  double b = 0.0;
  // Smoothed targets used for positives and negatives during fitting.
  double target_positive = 1.0;
  double target_negative = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;

  double operator()(double s) const;
};

struct PlattOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 10000;
};

/// Fits Platt scaling by minimising cross-entropy against the targets
/// (N+ + 1)/(N+ + 2) and 1/(N- + 2) with a damped Newton method. Requires
/// both classes; throws std::invalid_argument otherwise.
PlattFit fit_platt(std::span<const double> scores, std::span<const int> labels, const PlattOptions& options = {});

double apply_platt(const PlattFit& fit, double s);

/// Platt's loss and gradient for the given parameters (exposed for checks).
struct PlattObjective {
  double loss;
  double grad_a;
  double grad_b;
};
PlattObjective platt_objective(std::span<const double> scores, std::span<const int> labels, double a, double b);

/// Probability interval [p0, p1] for label 1 together with its regularised
/// point estimate p1 / (1 - p0 + p1).
struct ProbabilityInterval {
  double p0 = 0.0;
  double p1 = 1.0;
  double point = 0.5;

  double width() const { return p1 - p0; }
};

/// Maps an interval to a single probability, pulled towards 0.5 by the
/// interval width. Throws std::invalid_argument unless 0 <= p0 <= p1 <= 1.
double regularized_point(double p0, double p1);

/// Inductive Venn-Abers predictor. Holds the calibration scores and labels;
/// for each test score the calibration set is augmented once with
/// (s, 0) and once with (s, 1), an isotonic fit is computed for each, and the
/// two fitted values at s form the interval. A test score equal to a
/// calibration score joins that score's tie group.
class VennAbersCalibrator {
 public:
  VennAbersCalibrator(std::span<const double> scores, std::span<const int> labels);

  ProbabilityInterval interval(double s) const;
  std::vector<ProbabilityInterval> intervals(std::span<const double> scores) const;

  std::size_t size() const { return n_; }
  const std::vector<double>& distinct_scores() const { return scores_; }

 private:
  double fitted_at(double s, int label) const;

  std::vector<double> scores_;
  std::vector<double> label_sums_;
  std::vector<double> weights_;
  std::size_t n_ = 0;
};

}  // namespace vacal
