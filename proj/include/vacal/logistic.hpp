#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "vacal/dataset.hpp"

namespace vacal {

struct LogisticParams {
  int max_iterations = 500;
  // Stop once the largest Newton step on the standardised scale is below this.
  double tolerance = 1e-8;
};

/// Unpenalised logistic regression fitted by Newton-Raphson on standardised
/// features; the coefficients are mapped back to the raw feature scale.
class LogisticRegression {
 public:
  static LogisticRegression fit(const FeatureMatrix& x, std::span<const int> y, const LogisticParams& params = {});

  double score(std::span<const double> x) const;
  double linear(std::span<const double> x) const;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  int iterations() const { return iterations_; }
  bool converged() const { return converged_; }

  nlohmann::json to_json() const;
  static LogisticRegression from_json(const nlohmann::json& j);

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
  int iterations_ = 0;
  bool converged_ = false;
};

/// 1 / (1 + exp(-z)) without overflow.
double logistic(double z);

}  // namespace vacal
