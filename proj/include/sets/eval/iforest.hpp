#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "sets/error.hpp"
#include "sets/random.hpp"

namespace sets {

/// Average path length of an unsuccessful BST search over n points.
inline double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  constexpr double euler_gamma = 0.5772156649015329;
  const double m = static_cast<double>(n - 1);
  return 2.0 * (std::log(m) + euler_gamma) - 2.0 * m / static_cast<double>(n);
}

class IsolationForest {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left when value < threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::size_t size = 0;  // training points reaching the node
    std::size_t depth = 0;
  };
  using Tree = std::vector<Node>;

  IsolationForest() = default;

  IsolationForest(const std::vector<std::vector<double>>& train, std::size_t n_trees, std::size_t subsample,
                  std::uint64_t seed) {
    if (train.empty()) throw ContractError("fit_iforest: empty training set");
    if (subsample == 0 || subsample > train.size()) throw ContractError("fit_iforest: need 1 <= subsample <= N_train");
    subsample_ = subsample;
    const auto height_limit = static_cast<std::size_t>(std::ceil(std::log2(std::max<std::size_t>(subsample, 2))));
    Rng rng(seed);
    std::vector<std::size_t> all(train.size());
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t t = 0; t < n_trees; ++t) {
      // partial Fisher-Yates: first `subsample` entries form the sample
      for (std::size_t i = 0; i < subsample; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(all.size() - i));
        std::swap(all[i], all[j]);
      }
      std::vector<std::size_t> sample(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(subsample));
      Tree tree;
      grow(tree, train, sample, 0, height_limit, rng);
      trees_.push_back(std::move(tree));
    }
  }

  bool fitted() const noexcept { return !trees_.empty(); }
  const std::vector<Tree>& trees() const noexcept { return trees_; }
  std::size_t subsample() const noexcept { return subsample_; }

  /// Depth of the leaf reached plus the expected remaining depth at that leaf.
  static double path_length(const Tree& tree, std::span<const double> v) {
    std::size_t at = 0;
    while (tree[at].feature >= 0)
      at = static_cast<std::size_t>(v[static_cast<std::size_t>(tree[at].feature)] < tree[at].threshold ? tree[at].left
                                                                                                        : tree[at].right);
    return static_cast<double>(tree[at].depth) + average_path_length(tree[at].size);
  }

  /// Anomaly score in (0, 1]; values near 1 are anomalous.
  double score(std::span<const double> v) const {
    if (!fitted()) throw ContractError("score_iforest: detector not fitted");
    double mean = 0.0;
    for (const auto& t : trees_) mean += path_length(t, v);
    mean /= static_cast<double>(trees_.size());
    return std::pow(2.0, -mean / average_path_length(subsample_));
  }

 private:
  static std::int32_t grow(Tree& tree, const std::vector<std::vector<double>>& data, std::vector<std::size_t>& idx,
                           std::size_t depth, std::size_t limit, Rng& rng) {
    const auto self = static_cast<std::int32_t>(tree.size());
    tree.push_back({-1, 0.0, -1, -1, idx.size(), depth});
    if (depth >= limit || idx.size() <= 1) return self;

    const std::size_t dims = data[idx.front()].size();
    std::vector<std::size_t> splittable;
    std::vector<std::pair<double, double>> bounds(dims);
    for (std::size_t f = 0; f < dims; ++f) {
      double lo = data[idx.front()][f], hi = lo;
      for (auto i : idx) {
        lo = std::min(lo, data[i][f]);
        hi = std::max(hi, data[i][f]);
      }
      bounds[f] = {lo, hi};
      if (lo < hi) splittable.push_back(f);
    }
    if (splittable.empty()) return self;

    const auto f = splittable[static_cast<std::size_t>(rng.below(splittable.size()))];
    double split = rng.uniform(bounds[f].first, bounds[f].second);
    if (split <= bounds[f].first) split = std::nextafter(bounds[f].first, bounds[f].second);
    std::vector<std::size_t> left, right;
    for (auto i : idx) (data[i][f] < split ? left : right).push_back(i);

    tree[static_cast<std::size_t>(self)].feature = static_cast<std::int32_t>(f);
    tree[static_cast<std::size_t>(self)].threshold = split;
    const auto l = grow(tree, data, left, depth + 1, limit, rng);
    const auto r = grow(tree, data, right, depth + 1, limit, rng);
    tree[static_cast<std::size_t>(self)].left = l;
    tree[static_cast<std::size_t>(self)].right = r;
    return self;
  }

  std::vector<Tree> trees_;
  std::size_t subsample_ = 0;
};

inline IsolationForest fit_iforest(const std::vector<std::vector<double>>& train, std::size_t n_trees,
                                   std::size_t subsample, std::uint64_t seed) {
  return IsolationForest(train, n_trees, subsample, seed);
}

}  // namespace sets
