#pragma once

// Shapelet-driven counterfactual generation.
//
// For an instance x of class A and a target class B the engine walks the
// dimensions in order of their best shapelet. On each dimension it first
// replaces the occurrences of A class-shapelets in x with the matching window
// of the nearest B neighbour, then inserts B class-shapelets at their mean
// occurrence position; every replacement is min-max scaled to x's range on
// that dimension and the model is queried after each one. If no single
// dimension flips the prediction, the per-dimension perturbation sequences
// are combined over growing subsets of dimensions.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sets/blackbox.hpp"
#include "sets/dataset.hpp"
#include "sets/error.hpp"
#include "sets/mining.hpp"
#include "sets/store.hpp"

#include <json.hpp>

namespace sets {

struct PerturbationRecord {
  enum class Kind { Removal, Introduction, Substitution };
  enum class Source { Nun, Shapelet };

  Kind kind = Kind::Removal;
  std::size_t dim = 0;
  std::size_t start = 0;  // window is [start, end)
  std::size_t end = 0;
  std::optional<ShapeletId> shapelet_id;
  Source source = Source::Nun;

  friend bool operator==(const PerturbationRecord&, const PerturbationRecord&) = default;
};

struct Counterfactual {
  std::string base_id;
  ClassLabel original_class;
  ClassLabel target_class;
  Matrix values;
  std::vector<PerturbationRecord> perturbations;
  bool valid = false;
  PredictionVector model_scores;
  /// 0: x already predicted as target, 1: single dimension, 2: dimension subset, -1: no valid result.
  int phase = -1;
  std::size_t model_calls = 0;

  /// Distinct dimensions touched by the perturbations.
  std::vector<std::size_t> perturbed_dims() const {
    std::vector<std::size_t> dims;
    for (const auto& p : perturbations) dims.push_back(p.dim);
    std::sort(dims.begin(), dims.end());
    dims.erase(std::unique(dims.begin(), dims.end()), dims.end());
    return dims;
  }
};

struct EngineConfig {
  /// 0 means min(D, 8).
  std::size_t max_dims_in_subset = 0;
  std::size_t knn_k = 1;
  /// Per class and dimension; 0 means no cap.
  std::size_t max_shapelets_per_dim = 0;
  /// Upper bound on model queries per explanation.
  std::size_t max_model_calls = 20000;
};

/// Training index of the class-`target` instance closest to x in flattened
/// Euclidean distance; ties go to the earliest training instance.
inline std::size_t nearest_unlike_neighbor_index(const Matrix& x, const ClassLabel& target, const MTSDataset& train) {
  std::optional<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.label(i) != target) continue;
    const auto a = x.flat();
    const auto b = train.instance(i).values.flat();
    if (a.size() != b.size()) throw ContractError("nearest_unlike_neighbor: shape mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    if (s < best_d) {
      best_d = s;
      best = i;
    }
  }
  if (!best) throw ContractError("nearest_unlike_neighbor: no training instance of class " + target);
  return *best;
}

inline const MTSInstance& nearest_unlike_neighbor(const MTSInstance& x, const ClassLabel& target,
                                                  const MTSDataset& train) {
  return train.instance(nearest_unlike_neighbor_index(x.values, target, train));
}

/// Dimensions by best shapelet quality, descending; shapelet-free dimensions last.
inline std::vector<std::size_t> order_dimensions(const ShapeletStore& store) {
  std::vector<std::size_t> dims(store.dims());
  std::iota(dims.begin(), dims.end(), 0);
  std::vector<std::optional<double>> best(store.dims());
  for (std::size_t d = 0; d < store.dims(); ++d) best[d] = store.best_quality(d);
  std::stable_sort(dims.begin(), dims.end(), [&](auto a, auto b) {
    if (best[a].has_value() != best[b].has_value()) return best[a].has_value();
    return best[a] && *best[a] > *best[b];
  });
  return dims;
}

/// Replaces an occurrence window with the neighbour's values at the same
/// time steps, scaled to `range` (x's range on that dimension).
inline Matrix remove_shapelet(const Matrix& x_cf, const Shapelet& sh, const Occurrence& occ, const Matrix& x_nn,
                              const DimensionRange& range) {
  require_same_shape(x_cf, x_nn, "remove_shapelet");
  if (occ.start + sh.length() > x_cf.length()) throw ContractError("remove_shapelet: window out of bounds");
  const auto window = x_nn.row(sh.dim).subspan(occ.start, sh.length());
  const auto scaled = minmax_rescale(window, range);
  Matrix out = x_cf;
  std::copy(scaled.begin(), scaled.end(), out.row(sh.dim).begin() + static_cast<std::ptrdiff_t>(occ.start));
  return out;
}

inline Matrix remove_shapelet(const Matrix& x_cf, const Shapelet& sh, const Occurrence& occ, const Matrix& x_nn,
                              const Matrix& x) {
  return remove_shapelet(x_cf, sh, occ, x_nn, dimension_range(x, sh.dim));
}

/// Writes the shapelet, scaled to `range`, at its mean occurrence start.
inline Matrix introduce_shapelet(const Matrix& x_cf, const Shapelet& sh, const OccurrenceDistribution& od,
                                 const DimensionRange& range) {
  if (od.mean_start + sh.length() > x_cf.length()) throw ContractError("introduce_shapelet: window out of bounds");
  const auto scaled = minmax_rescale(sh.values, range);
  Matrix out = x_cf;
  std::copy(scaled.begin(), scaled.end(), out.row(sh.dim).begin() + static_cast<std::ptrdiff_t>(od.mean_start));
  return out;
}

inline Matrix introduce_shapelet(const Matrix& x_cf, const Shapelet& sh, const OccurrenceDistribution& od,
                                 const Matrix& x) {
  return introduce_shapelet(x_cf, sh, od, dimension_range(x, sh.dim));
}

namespace detail {

struct PlannedStep {
  PerturbationRecord record;
  std::vector<double> values;
};

inline void apply_step(Matrix& m, const PlannedStep& s) {
  std::copy(s.values.begin(), s.values.end(), m.row(s.record.dim).begin() + static_cast<std::ptrdiff_t>(s.record.start));
}

/// Removal then introduction steps for one dimension. Replacement values
/// depend only on x, the neighbour and the store, so steps compose by
/// plain overwriting.
inline std::vector<PlannedStep> plan_dimension(std::size_t dim, const MTSInstance& x, const ClassLabel& original,
                                               const ClassLabel& target, const Matrix& nun, const ShapeletStore& store,
                                               const EngineConfig& cfg) {
  std::vector<PlannedStep> plan;
  const auto range = dimension_range(x.values, dim);
  auto capped = [&](const std::vector<ShapeletId>& ids) {
    if (cfg.max_shapelets_per_dim == 0 || ids.size() <= cfg.max_shapelets_per_dim) return ids;
    return std::vector<ShapeletId>(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cfg.max_shapelets_per_dim));
  };
  for (auto id : capped(store.by_class_dim(original, dim))) {
    const auto& sh = store.shapelet(id);
    for (const auto& occ : find_occurrences(sh, x)) {
      const auto window = nun.row(dim).subspan(occ.start, sh.length());
      plan.push_back({{PerturbationRecord::Kind::Removal, dim, occ.start, occ.start + sh.length(), id,
                       PerturbationRecord::Source::Nun},
                      minmax_rescale(window, range)});
    }
  }
  for (auto id : capped(store.by_class_dim(target, dim))) {
    const auto& sh = store.shapelet(id);
    const auto start = sh.distribution.mean_start;
    plan.push_back({{PerturbationRecord::Kind::Introduction, dim, start, start + sh.length(), id,
                     PerturbationRecord::Source::Shapelet},
                    minmax_rescale(sh.values, range)});
  }
  return plan;
}

template <class F>
void for_each_combination(std::size_t n, std::size_t k, F&& f) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    f(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

/// Generates a counterfactual of class `target` for `x` (of class `original`).
/// The model is queried after every individual perturbation in the
/// single-dimension phase and after every composed subset in the second phase.
/// When nothing flips the prediction, the attempt with the highest target
/// score is returned with valid == false.
inline Counterfactual explain(const MTSInstance& x, const ClassLabel& original, const ClassLabel& target,
                              const ShapeletStore& store, Classifier& model, const MTSDataset& train,
                              const EngineConfig& cfg = {}) {
  if (store.empty()) throw EmptyStoreError("explain: the shapelet store is empty");
  if (store.dims() != x.values.dims() || store.series_length() != x.values.length())
    throw ContractError("explain: instance shape does not match the shapelet store");

  Counterfactual cf{x.id, original, target, x.values, {}, false, {}, -1, 0};
  auto query = [&](const Matrix& m) {
    ++cf.model_calls;
    return model.predict(m);
  };

  cf.model_scores = query(x.values);
  if (cf.model_scores.argmax() == target) {
    cf.valid = true;
    cf.phase = 0;
    return cf;
  }

  const Matrix& nun = train.instance(nearest_unlike_neighbor_index(x.values, target, train)).values;
  const auto dims = order_dimensions(store);

  double best_score = -std::numeric_limits<double>::infinity();
  auto consider = [&](const Matrix& m, const std::vector<PerturbationRecord>& recs, const PredictionVector& scores,
                      int phase) {
    const bool flipped = scores.argmax() == target;
    if (flipped || scores.score(target) > best_score) {
      best_score = scores.score(target);
      cf.values = m;
      cf.perturbations = recs;
      cf.model_scores = scores;
    }
    if (flipped) {
      cf.valid = true;
      cf.phase = phase;
    }
    return flipped;
  };

  std::vector<std::vector<detail::PlannedStep>> plans(store.dims());
  for (auto d : dims) {
    plans[d] = detail::plan_dimension(d, x, original, target, nun, store, cfg);
    Matrix m = x.values;
    std::vector<PerturbationRecord> recs;
    for (const auto& step : plans[d]) {
      if (cf.model_calls >= cfg.max_model_calls) return cf;
      detail::apply_step(m, step);
      recs.push_back(step.record);
      if (consider(m, recs, query(m), 1)) return cf;
    }
  }

  std::vector<std::size_t> active;
  for (auto d : dims)
    if (!plans[d].empty()) active.push_back(d);
  const std::size_t max_k =
      std::min(active.size(), cfg.max_dims_in_subset == 0 ? std::min<std::size_t>(store.dims(), 8)
                                                          : std::min(cfg.max_dims_in_subset, store.dims()));
  for (std::size_t k = 2; k <= max_k; ++k) {
    struct Subset {
      std::vector<std::size_t> dims;
      double quality;
    };
    std::vector<Subset> subsets;
    detail::for_each_combination(active.size(), k, [&](const std::vector<std::size_t>& idx) {
      Subset s{{}, 0.0};
      for (auto i : idx) {
        s.dims.push_back(active[i]);
        s.quality += store.best_quality(active[i]).value_or(0.0);
      }
      std::sort(s.dims.begin(), s.dims.end());
      subsets.push_back(std::move(s));
    });
    std::stable_sort(subsets.begin(), subsets.end(), [](const Subset& a, const Subset& b) {
      if (a.quality != b.quality) return a.quality > b.quality;
      return a.dims < b.dims;
    });
    for (const auto& s : subsets) {
      if (cf.model_calls >= cfg.max_model_calls) return cf;
      Matrix m = x.values;
      std::vector<PerturbationRecord> recs;
      for (auto d : s.dims)
        for (const auto& step : plans[d]) {
          detail::apply_step(m, step);
          recs.push_back(step.record);
        }
      if (consider(m, recs, query(m), 2)) return cf;
    }
  }
  return cf;
}

inline const char* to_string(PerturbationRecord::Kind k) {
  switch (k) {
    case PerturbationRecord::Kind::Removal:
      return "removal";
    case PerturbationRecord::Kind::Introduction:
      return "introduction";
    case PerturbationRecord::Kind::Substitution:
      return "substitution";
  }
  return "?";
}

inline nlohmann::json to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t d = 0; d < m.dims(); ++d) {
    const auto r = m.row(d);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const std::size_t d = j.size();
  const std::size_t t = d ? j.at(0).size() : 0;
  Matrix m(d, t);
  for (std::size_t i = 0; i < d; ++i) {
    if (j[i].size() != t) throw ContractError("matrix_from_json: ragged rows");
    for (std::size_t k = 0; k < t; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

inline nlohmann::json to_json(const Counterfactual& cf) {
  nlohmann::json perts = nlohmann::json::array();
  for (const auto& p : cf.perturbations) {
    nlohmann::json jp{{"kind", to_string(p.kind)},
                      {"dim", p.dim},
                      {"start", p.start},
                      {"end", p.end},
                      {"source", p.source == PerturbationRecord::Source::Nun ? "nun" : "shapelet"}};
    jp["shapelet_id"] = p.shapelet_id ? nlohmann::json(*p.shapelet_id) : nlohmann::json(nullptr);
    perts.push_back(std::move(jp));
  }
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [c, s] : cf.model_scores.entries()) scores[c] = s;
  return {{"base_id", cf.base_id},       {"original_class", cf.original_class},
          {"target_class", cf.target_class}, {"valid", cf.valid},
          {"phase", cf.phase},           {"model_calls", cf.model_calls},
          {"perturbations", std::move(perts)}, {"model_scores", std::move(scores)},
          {"values", to_json(cf.values)}};
}

inline Counterfactual counterfactual_from_json(const nlohmann::json& j) {
  Counterfactual cf;
  cf.base_id = j.at("base_id");
  cf.original_class = j.at("original_class");
  cf.target_class = j.at("target_class");
  cf.valid = j.at("valid");
  cf.phase = j.at("phase");
  cf.model_calls = j.at("model_calls");
  for (const auto& jp : j.at("perturbations")) {
    PerturbationRecord p;
    const std::string kind = jp.at("kind");
    p.kind = kind == "removal"        ? PerturbationRecord::Kind::Removal
             : kind == "introduction" ? PerturbationRecord::Kind::Introduction
                                      : PerturbationRecord::Kind::Substitution;
    p.dim = jp.at("dim");
    p.start = jp.at("start");
    p.end = jp.at("end");
    p.source = jp.at("source") == "nun" ? PerturbationRecord::Source::Nun : PerturbationRecord::Source::Shapelet;
    if (!jp.at("shapelet_id").is_null()) p.shapelet_id = jp.at("shapelet_id").get<ShapeletId>();
    cf.perturbations.push_back(p);
  }
  cf.model_scores = PredictionVector(j.at("model_scores").get<std::map<ClassLabel, double>>());
  cf.values = matrix_from_json(j.at("values"));
  return cf;
}

}  // namespace sets
