#pragma once

// Four novelty detectors fitted on the training split: LOF, isolation forest
// and one-class SVM on the flattened series, and one-class SVM on the
// concatenated per-dimension matrix profiles.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "sets/dataset.hpp"
#include "sets/error.hpp"
#include "sets/eval/iforest.hpp"
#include "sets/eval/lof.hpp"
#include "sets/eval/matrix_profile.hpp"
#include "sets/eval/ocsvm.hpp"

namespace sets {

struct DetectorConfig {
  std::size_t lof_k = 10;  // clamped to N_train - 1
  double lof_margin = 0.5;
  std::size_t if_trees = 100;
  std::size_t if_subsample = 256;  // clamped to N_train
  double if_threshold = 0.5;
  std::uint64_t if_seed = 0;
  double ocsvm_nu = 0.05;
  double ocsvm_gamma = 0.0;  // 0 selects scale_gamma on the fitted features
  std::size_t mp_window = 0;  // 0 selects floor(T / 4)
};

struct PlausibilityResult {
  double lof = 0.0;
  double iforest = 0.0;
  double ocsvm_raw = 0.0;
  double ocsvm_mp = 0.0;
  bool lof_ood = false;
  bool iforest_ood = false;
  bool ocsvm_raw_ood = false;
  bool ocsvm_mp_ood = false;

  std::size_t ood_count() const noexcept { return lof_ood + iforest_ood + ocsvm_raw_ood + ocsvm_mp_ood; }
};

inline std::vector<double> flatten(const Matrix& m) { return {m.flat().begin(), m.flat().end()}; }

class PlausibilityDetectors {
 public:
  PlausibilityDetectors() = default;

  PlausibilityDetectors(const MTSDataset& train, const DetectorConfig& cfg) : cfg_(cfg) {
    if (train.size() < 2) throw ContractError("plausibility: need at least 2 training instances");
    mp_window_ = cfg.mp_window ? cfg.mp_window : std::max<std::size_t>(2, train.length() / 4);
    std::vector<std::vector<double>> raw, mp;
    for (const auto& inst : train.instances()) {
      raw.push_back(flatten(inst.values));
      mp.push_back(matrix_profile_features(inst.values, mp_window_));
    }
    lof_ = fit_lof(raw, std::min(cfg.lof_k, raw.size() - 1));
    iforest_ = fit_iforest(raw, cfg.if_trees, std::min(cfg.if_subsample, raw.size()), cfg.if_seed);
    const double g_raw = cfg.ocsvm_gamma > 0 ? cfg.ocsvm_gamma : scale_gamma(raw);
    const double g_mp = cfg.ocsvm_gamma > 0 ? cfg.ocsvm_gamma : scale_gamma(mp);
    ocsvm_raw_ = fit_ocsvm(std::move(raw), cfg.ocsvm_nu, g_raw);
    ocsvm_mp_ = fit_ocsvm(std::move(mp), cfg.ocsvm_nu, g_mp);
    fitted_ = true;
  }

  bool fitted() const noexcept { return fitted_; }
  std::size_t mp_window() const noexcept { return mp_window_; }

  PlausibilityResult evaluate(const Matrix& x_cf) const {
    if (!fitted_) throw ContractError("plausibility: detectors not fitted");
    const auto raw = flatten(x_cf);
    const auto mp = matrix_profile_features(x_cf, mp_window_);
    PlausibilityResult r;
    r.lof = lof_.score(raw);
    r.iforest = iforest_.score(raw);
    r.ocsvm_raw = ocsvm_raw_.decision(raw);
    r.ocsvm_mp = ocsvm_mp_.decision(mp);
    r.lof_ood = r.lof > 1.0 + cfg_.lof_margin;
    r.iforest_ood = r.iforest > cfg_.if_threshold;
    r.ocsvm_raw_ood = r.ocsvm_raw < 0.0;
    r.ocsvm_mp_ood = r.ocsvm_mp < 0.0;
    return r;
  }

 private:
  DetectorConfig cfg_;
  std::size_t mp_window_ = 0;
  bool fitted_ = false;
  LocalOutlierFactor lof_;
  IsolationForest iforest_;
  OneClassSvm ocsvm_raw_;
  OneClassSvm ocsvm_mp_;
};

inline PlausibilityResult plausibility(const Matrix& x_cf, const PlausibilityDetectors& detectors) {
  return detectors.evaluate(x_cf);
}

}  // namespace sets
