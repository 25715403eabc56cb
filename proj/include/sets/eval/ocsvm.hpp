#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sets/error.hpp"

namespace sets {

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-gamma * s);
}

/// 1 / (n_features * variance of all training values); falls back to
/// 1 / n_features on constant data.
inline double scale_gamma(const std::vector<std::vector<double>>& x) {
  if (x.empty() || x.front().empty()) throw ContractError("scale_gamma: empty data");
  double mean = 0.0, n = 0.0;
  for (const auto& r : x)
    for (double v : r) mean += v, n += 1.0;
  mean /= n;
  double var = 0.0;
  for (const auto& r : x)
    for (double v : r) var += (v - mean) * (v - mean);
  var /= n;
  const double f = static_cast<double>(x.front().size());
  return var > 0.0 ? 1.0 / (f * var) : 1.0 / f;
}

/// One-class SVM with an RBF kernel. Dual: minimise 1/2 a'Qa subject to
/// 0 <= a_i <= 1 and sum a_i = nu * l, solved by maximal-violating-pair SMO.
/// decision(v) = sum a_i k(x_i, v) - rho; negative means outside the support.
class OneClassSvm {
 public:
  OneClassSvm() = default;

  OneClassSvm(std::vector<std::vector<double>> train, double nu, double gamma, double tolerance = 1e-3,
              std::size_t max_iterations = 0)
      : gamma_(gamma) {
    if (!(nu > 0.0 && nu <= 1.0)) throw ContractError("fit_ocsvm: nu must lie in (0, 1]");
    if (!(gamma > 0.0)) throw ContractError("fit_ocsvm: gamma must be > 0");
    if (train.empty()) throw ContractError("fit_ocsvm: empty training set");
    const std::size_t l = train.size();
    if (max_iterations == 0) max_iterations = std::max<std::size_t>(10'000'000, 100 * l);

    std::vector<double> q(l * l);
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = i; j < l; ++j) q[i * l + j] = q[j * l + i] = rbf_kernel(train[i], train[j], gamma);

    alpha_.assign(l, 0.0);
    const double total = nu * static_cast<double>(l);
    const auto full = static_cast<std::size_t>(total);
    for (std::size_t i = 0; i < full && i < l; ++i) alpha_[i] = 1.0;
    if (full < l) alpha_[full] = total - static_cast<double>(full);

    std::vector<double> grad(l, 0.0);
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < l; ++j) grad[i] += q[i * l + j] * alpha_[j];

    constexpr double tau = 1e-12;
    for (iterations_ = 0;; ++iterations_) {
      // i: can grow, smallest gradient; j: can shrink, largest gradient
      std::size_t i = l, j = l;
      double gmin = std::numeric_limits<double>::infinity(), gmax = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < l; ++t) {
        if (alpha_[t] < 1.0 && grad[t] < gmin) gmin = grad[t], i = t;
        if (alpha_[t] > 0.0 && grad[t] > gmax) gmax = grad[t], j = t;
      }
      if (i == l || j == l || gmax - gmin < tolerance) break;
      if (iterations_ >= max_iterations)
        throw ConvergenceError("fit_ocsvm: no convergence within " + std::to_string(max_iterations) + " iterations");
      const double curvature = std::max(q[i * l + i] + q[j * l + j] - 2.0 * q[i * l + j], tau);
      double delta = (gmax - gmin) / curvature;
      delta = std::min({delta, 1.0 - alpha_[i], alpha_[j]});
      alpha_[i] += delta;
      alpha_[j] -= delta;
      for (std::size_t t = 0; t < l; ++t) grad[t] += delta * (q[t * l + i] - q[t * l + j]);
    }

    objective_ = 0.0;
    for (std::size_t t = 0; t < l; ++t) objective_ += 0.5 * alpha_[t] * grad[t];

    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity(), sum = 0.0;
    std::size_t free = 0;
    for (std::size_t t = 0; t < l; ++t) {
      if (alpha_[t] >= 1.0)
        lb = std::max(lb, grad[t]);
      else if (alpha_[t] <= 0.0)
        ub = std::min(ub, grad[t]);
      else
        sum += grad[t], ++free;
    }
    rho_ = free > 0 ? sum / static_cast<double>(free) : 0.5 * (ub + lb);

    for (std::size_t t = 0; t < l; ++t)
      if (alpha_[t] > 0.0) {
        support_.push_back(std::move(train[t]));
        coef_.push_back(alpha_[t]);
      }
  }

  bool fitted() const noexcept { return !support_.empty(); }

  double decision(std::span<const double> v) const {
    if (!fitted()) throw ContractError("score_ocsvm: detector not fitted");
    double s = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) s += coef_[i] * rbf_kernel(support_[i], v, gamma_);
    return s - rho_;
  }

  /// Final dual objective 1/2 a'Qa.
  double objective() const noexcept { return objective_; }
  double rho() const noexcept { return rho_; }
  const std::vector<double>& alpha() const noexcept { return alpha_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double gamma_ = 0.0;
  double rho_ = 0.0;
  double objective_ = 0.0;
  std::size_t iterations_ = 0;
  std::vector<double> alpha_;
  std::vector<std::vector<double>> support_;
  std::vector<double> coef_;
};

inline OneClassSvm fit_ocsvm(std::vector<std::vector<double>> train, double nu, double gamma) {
  return OneClassSvm(std::move(train), nu, gamma);
}

}  // namespace sets
