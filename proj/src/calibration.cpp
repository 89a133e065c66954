#include "vacal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace vacal {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels, const char* who) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument(std::string(who) + ": scores and labels differ in length");
  }
  if (scores.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw std::invalid_argument(std::string(who) + ": non-finite score");
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument(std::string(who) + ": labels must be 0 or 1");
  }
}

struct Pooled {
  std::vector<double> scores;
  std::vector<double> label_sums;
  std::vector<double> weights;
};

Pooled pool_ties(std::span<const double> scores, std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  Pooled p;
  for (std::size_t idx : order) {
    if (p.scores.empty() || p.scores.back() != scores[idx]) {
      p.scores.push_back(scores[idx]);
      p.label_sums.push_back(0.0);
      p.weights.push_back(0.0);
    }
    p.label_sums.back() += labels[idx];
    p.weights.back() += 1.0;
  }
  return p;
}

}  // namespace

namespace detail {

std::vector<double> pava_pooled(std::span<const double> label_sums, std::span<const double> weights) {
  struct Block {
    double sum;
    double weight;
    std::size_t end;  // one past the last point in the block
  };
  std::vector<Block> blocks;
  blocks.reserve(label_sums.size());
  for (std::size_t i = 0; i < label_sums.size(); ++i) {
    blocks.push_back({label_sums[i], weights[i], i + 1});
    // Merge while the previous block's mean exceeds the last one's. Sums and
    // weights are integer-valued, so the cross-multiplied test is exact.
    while (blocks.size() > 1) {
      const Block& last = blocks.back();
      const Block& prev = blocks[blocks.size() - 2];
      if (prev.sum * last.weight <= last.sum * prev.weight) break;
      Block merged{prev.sum + last.sum, prev.weight + last.weight, last.end};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> fitted(label_sums.size());
  std::size_t start = 0;
  for (const auto& b : blocks) {
    const double mean = b.sum / b.weight;
    std::fill(fitted.begin() + static_cast<std::ptrdiff_t>(start), fitted.begin() + static_cast<std::ptrdiff_t>(b.end),
              mean);
    start = b.end;
  }
  return fitted;
}

}  // namespace detail

IsotonicFit pava(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels, "pava");
  Pooled pooled = pool_ties(scores, labels);
  IsotonicFit fit;
  fit.fitted_values = detail::pava_pooled(pooled.label_sums, pooled.weights);
  fit.breakpoints = std::move(pooled.scores);
  fit.weights = std::move(pooled.weights);
  return fit;
}

double IsotonicFit::operator()(double s) const {
  if (breakpoints.empty()) throw std::invalid_argument("isotonic fit is empty");
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), s);
  if (it == breakpoints.begin()) return fitted_values.front();
  return fitted_values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

double isotonic_calibrate(const IsotonicFit& fit, double s) { return fit(s); }

double PlattFit::operator()(double s) const {
  const double z = a * s + b;
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double apply_platt(const PlattFit& fit, double s) { return fit(s); }

namespace {

struct PlattTargets {
  double positive;
  double negative;
};

PlattTargets platt_targets(std::span<const int> labels) {
  double n_pos = 0.0;
  for (int y : labels) n_pos += y;
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  return {(n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)};
}

struct PlattTerms {
  double loss = 0.0;
  double g_a = 0.0, g_b = 0.0;
  double h_aa = 0.0, h_ab = 0.0, h_bb = 0.0;
};

// Cross-entropy of targets t against p = 1/(1+exp(f)), f = a*s + b, written
// as  t*f + log(1 + exp(-f))  to stay finite for large |f|.
PlattTerms platt_terms(std::span<const double> s, std::span<const int> y, const PlattTargets& t, double a,
                       double b) {
  PlattTerms out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double target = y[i] == 1 ? t.positive : t.negative;
    const double f = a * s[i] + b;
    double p, q;  // p = 1/(1+e^f), q = 1 - p
    if (f >= 0.0) {
      const double e = std::exp(-f);
      out.loss += target * f + std::log1p(e);
      p = e / (1.0 + e);
      q = 1.0 / (1.0 + e);
    } else {
      const double e = std::exp(f);
      out.loss += (target - 1.0) * f + std::log1p(e);
      p = 1.0 / (1.0 + e);
      q = e / (1.0 + e);
    }
    const double d1 = target - p;
    const double d2 = p * q;
    out.g_a += s[i] * d1;
    out.g_b += d1;
    out.h_aa += s[i] * s[i] * d2;
    out.h_ab += s[i] * d2;
    out.h_bb += d2;
  }
  return out;
}

}  // namespace

PlattObjective platt_objective(std::span<const double> scores, std::span<const int> labels, double a, double b) {
  check_inputs(scores, labels, "platt");
  const auto terms = platt_terms(scores, labels, platt_targets(labels), a, b);
  return {terms.loss, terms.g_a, terms.g_b};
}

PlattFit fit_platt(std::span<const double> scores, std::span<const int> labels, const PlattOptions& options) {
  check_inputs(scores, labels, "platt");
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (n_pos == 0 || n_pos == labels.size()) {
    throw std::invalid_argument("platt: both classes must be present");
  }
  const PlattTargets targets = platt_targets(labels);
  const double n_neg = static_cast<double>(labels.size() - n_pos);

  PlattFit fit;
  fit.target_positive = targets.positive;
  fit.target_negative = targets.negative;
  fit.a = 0.0;
  fit.b = std::log((n_neg + 1.0) / (static_cast<double>(n_pos) + 1.0));

  PlattTerms terms = platt_terms(scores, labels, targets, fit.a, fit.b);
  constexpr double kRidge = 1e-12;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    fit.gradient_norm = std::hypot(terms.g_a, terms.g_b);
    if (fit.gradient_norm <= options.gradient_tolerance) break;
    fit.iterations = iter + 1;

    const double h11 = terms.h_aa + kRidge, h22 = terms.h_bb + kRidge, h12 = terms.h_ab;
    const double det = h11 * h22 - h12 * h12;
    double da = -(h22 * terms.g_a - h12 * terms.g_b) / det;
    double db = -(-h12 * terms.g_a + h11 * terms.g_b) / det;
    if (!std::isfinite(da) || !std::isfinite(db)) {
      da = -terms.g_a;
      db = -terms.g_b;
    }
    const double slope = terms.g_a * da + terms.g_b * db;

    // Backtracking line search with the Armijo condition. Close to the
    // optimum the decrease drops below the rounding noise of the summed loss;
    // there a step that shrinks the gradient is taken instead.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(terms.loss) + 1.0);
    double step = 1.0;
    PlattTerms next;
    bool accepted = false;
    while (step >= 1e-10) {
      next = platt_terms(scores, labels, targets, fit.a + step * da, fit.b + step * db);
      const bool armijo = next.loss <= terms.loss + 1e-4 * step * slope;
      const bool flat = std::abs(next.loss - terms.loss) <= noise &&
                        std::hypot(next.g_a, next.g_b) < fit.gradient_norm;
      if (armijo || flat) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further decrease representable
    fit.a += step * da;
    fit.b += step * db;
    terms = next;
  }
  fit.gradient_norm = std::hypot(terms.g_a, terms.g_b);
  return fit;
}

double regularized_point(double p0, double p1) {
  if (!(p0 >= 0.0 && p0 <= p1 && p1 <= 1.0)) {
    throw std::invalid_argument("regularized_point: requires 0 <= p0 <= p1 <= 1");
  }
  return p1 / (1.0 - p0 + p1);
}

VennAbersCalibrator::VennAbersCalibrator(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels, "venn-abers");
  Pooled pooled = pool_ties(scores, labels);
  scores_ = std::move(pooled.scores);
  label_sums_ = std::move(pooled.label_sums);
  weights_ = std::move(pooled.weights);
  n_ = scores.size();
}

double VennAbersCalibrator::fitted_at(double s, int label) const {
  auto it = std::lower_bound(scores_.begin(), scores_.end(), s);
  const auto pos = static_cast<std::size_t>(it - scores_.begin());
  std::vector<double> sums;
  std::vector<double> weights;
  if (it != scores_.end() && *it == s) {
    sums = label_sums_;
    weights = weights_;
    sums[pos] += label;
    weights[pos] += 1.0;
  } else {
    sums.reserve(label_sums_.size() + 1);
    weights.reserve(weights_.size() + 1);
    sums.assign(label_sums_.begin(), label_sums_.begin() + static_cast<std::ptrdiff_t>(pos));
    weights.assign(weights_.begin(), weights_.begin() + static_cast<std::ptrdiff_t>(pos));
    sums.push_back(label);
    weights.push_back(1.0);
    sums.insert(sums.end(), label_sums_.begin() + static_cast<std::ptrdiff_t>(pos), label_sums_.end());
    weights.insert(weights.end(), weights_.begin() + static_cast<std::ptrdiff_t>(pos), weights_.end());
  }
  return detail::pava_pooled(sums, weights)[pos];
}

ProbabilityInterval VennAbersCalibrator::interval(double s) const {
  if (!std::isfinite(s)) throw std::invalid_argument("venn-abers: non-finite test score");
  ProbabilityInterval out;
  out.p0 = fitted_at(s, 0);
  out.p1 = fitted_at(s, 1);
  out.point = regularized_point(out.p0, out.p1);
  return out;
}

std::vector<ProbabilityInterval> VennAbersCalibrator::intervals(std::span<const double> scores) const {
  std::vector<ProbabilityInterval> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(interval(s));
  return out;
}

}  // namespace vacal
