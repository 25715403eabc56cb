#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "sets/error.hpp"

namespace sets {

/// Local outlier factor over Euclidean distance with exactly k neighbours
/// (ties broken by training index).
class LocalOutlierFactor {
 public:
  /// Floor applied to mean reachability distances so duplicates stay finite.
  static constexpr double kDistanceFloor = 1e-12;

  LocalOutlierFactor() = default;

  LocalOutlierFactor(std::vector<std::vector<double>> train, std::size_t k) : train_(std::move(train)), k_(k) {
    if (train_.empty() || k_ < 1 || k_ >= train_.size()) throw ContractError("fit_lof: need 1 <= k < N_train");
    const std::size_t n = train_.size();
    k_distance_.resize(n);
    neighbors_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      neighbors_[i] = knn(train_[i], i);
      k_distance_[i] = neighbors_[i].back().first;
    }
    lrd_.resize(n);
    for (std::size_t i = 0; i < n; ++i) lrd_[i] = local_density(neighbors_[i]);
  }

  bool fitted() const noexcept { return !train_.empty(); }
  std::size_t k() const noexcept { return k_; }

  double score(std::span<const double> v) const {
    if (!fitted()) throw ContractError("score_lof: detector not fitted");
    const auto nb = knn(v, train_.size());
    const double own = local_density(nb);
    double ratio = 0.0;
    for (const auto& [d, j] : nb) ratio += lrd_[j];
    return ratio / (static_cast<double>(nb.size()) * own);
  }

  /// Local reachability densities of the training points.
  const std::vector<double>& training_lrd() const noexcept { return lrd_; }

 private:
  static double distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("lof: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  }

  // k nearest training points, skipping index `self`
  std::vector<std::pair<double, std::size_t>> knn(std::span<const double> v, std::size_t self) const {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(train_.size());
    for (std::size_t j = 0; j < train_.size(); ++j)
      if (j != self) d.emplace_back(distance(v, train_[j]), j);
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k_), d.end());
    d.resize(k_);
    return d;
  }

  double local_density(const std::vector<std::pair<double, std::size_t>>& nb) const {
    double reach = 0.0;
    for (const auto& [d, j] : nb) reach += std::max(k_distance_[j], d);
    return 1.0 / std::max(reach / static_cast<double>(nb.size()), kDistanceFloor);
  }

  std::vector<std::vector<double>> train_;
  std::size_t k_ = 0;
  std::vector<double> k_distance_;
  std::vector<std::vector<std::pair<double, std::size_t>>> neighbors_;
  std::vector<double> lrd_;
};

inline LocalOutlierFactor fit_lof(std::vector<std::vector<double>> train, std::size_t k) {
  return LocalOutlierFactor(std::move(train), k);
}

}  // namespace sets
