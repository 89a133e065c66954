#include "vacal/logistic.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "vacal/error.hpp"

namespace vacal {

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// Log-likelihood of labels under linear predictor eta, computed stably.
double log_likelihood(const Eigen::VectorXd& eta, std::span<const int> y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double z = eta[i];
    // log(1 + e^z)
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    ll += y[static_cast<std::size_t>(i)] * z - softplus;
  }
  return ll;
}

}  // namespace

LogisticRegression LogisticRegression::fit(const FeatureMatrix& x, std::span<const int> y,
                                           const LogisticParams& params) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n == 0) throw std::invalid_argument("logistic regression: no training instances");
  if (y.size() != n) throw std::invalid_argument("logistic regression: feature rows and label count differ");
  if (params.max_iterations < 1) throw std::invalid_argument("logistic regression: max_iterations must be positive");

  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 0 && y[i] != 1) throw ValidationError("logistic regression: labels must be 0 or 1");
    for (std::size_t j = 0; j < d; ++j) {
      const double v = x(i, j);
      if (!std::isfinite(v)) {
        throw ValidationError(fmt::format("logistic regression: non-finite feature at row {}, column {}", i, j));
      }
      mean[j] += v;
    }
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) scale[j] += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
  }
  for (auto& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s == 0.0) s = 1.0;
  }

  // Design matrix with an intercept column first.
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d + 1));
  Eigen::VectorXd target(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    z(r, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) z(r, static_cast<Eigen::Index>(j + 1)) = (x(i, j) - mean[j]) / scale[j];
    target[r] = y[i];
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1));
  Eigen::VectorXd eta = z * beta;
  double ll = log_likelihood(eta, y);
  LogisticRegression model;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    Eigen::VectorXd p(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      p[i] = logistic(eta[i]);
      w[i] = p[i] * (1.0 - p[i]);
    }
    const Eigen::VectorXd gradient = z.transpose() * (target - p);
    Eigen::MatrixXd hessian = z.transpose() * w.asDiagonal() * z;
    hessian.diagonal().array() += 1e-12 * (1.0 + hessian.diagonal().array());
    Eigen::VectorXd step = hessian.ldlt().solve(gradient);
    if (!step.allFinite()) step = gradient;

    // Step halving keeps every iterate an ascent step.
    double factor = 1.0;
    Eigen::VectorXd next = beta + step;
    Eigen::VectorXd next_eta = z * next;
    double next_ll = log_likelihood(next_eta, y);
    while (next_ll < ll && factor > 1e-10) {
      factor *= 0.5;
      next = beta + factor * step;
      next_eta = z * next;
      next_ll = log_likelihood(next_eta, y);
    }
    const double change = (factor * step).cwiseAbs().maxCoeff();
    beta = next;
    eta = next_eta;
    ll = next_ll;
    model.iterations_ = iter + 1;
    if (change < params.tolerance) {
      model.converged_ = true;
      break;
    }
  }

  model.weights_.resize(d);
  model.bias_ = beta[0];
  for (std::size_t j = 0; j < d; ++j) {
    model.weights_[j] = beta[static_cast<Eigen::Index>(j + 1)] / scale[j];
    model.bias_ -= model.weights_[j] * mean[j];
  }
  return model;
}

double LogisticRegression::linear(std::span<const double> x) const {
  if (x.size() != weights_.size()) {
    throw std::invalid_argument(
        fmt::format("logistic regression: expected {} features, got {}", weights_.size(), x.size()));
  }
  double z = bias_;
  for (std::size_t j = 0; j < x.size(); ++j) z += weights_[j] * x[j];
  return z;
}

double LogisticRegression::score(std::span<const double> x) const { return logistic(linear(x)); }

nlohmann::json LogisticRegression::to_json() const {
  return {{"type", "logistic_regression"}, {"weights", weights_}, {"bias", bias_}, {"iterations", iterations_}};
}

LogisticRegression LogisticRegression::from_json(const nlohmann::json& j) {
  if (j.at("type").get<std::string>() != "logistic_regression") {
    throw SchemaError("model JSON is not a logistic regression");
  }
  LogisticRegression model;
  model.weights_ = j.at("weights").get<std::vector<double>>();
  model.bias_ = j.at("bias").get<double>();
  model.iterations_ = j.value("iterations", 0);
  return model;
}

}  // namespace vacal
