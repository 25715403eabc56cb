#pragma once

// Contracted shapelet discovery: random candidate sampling, orderline
// information gain, occurrence recording and class-shapelet selection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sets/dataset.hpp"
#include "sets/error.hpp"
#include "sets/random.hpp"
#include "sets/store.hpp"

namespace sets {

namespace detail {

inline bool is_constant_scale(double sd, double mean) { return sd <= 1e-12 * std::max(1.0, std::abs(mean)); }

/// Squared distance between a prepared query and the window of `series` at
/// `start`, abandoning once it exceeds `cutoff`.
inline double window_sq_distance(std::span<const double> query, std::span<const double> series, std::size_t start,
                                 bool normalize, double cutoff = std::numeric_limits<double>::infinity()) {
  const std::size_t len = query.size();
  const double* w = series.data() + start;
  double sum = 0.0;
  if (!normalize) {
    for (std::size_t i = 0; i < len; ++i) {
      const double d = query[i] - w[i];
      sum += d * d;
      if (sum > cutoff) return sum;
    }
    return sum;
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < len; ++i) mean += w[i];
  mean /= static_cast<double>(len);
  double var = 0.0;
  for (std::size_t i = 0; i < len; ++i) var += (w[i] - mean) * (w[i] - mean);
  const double sd = std::sqrt(var / static_cast<double>(len));
  if (is_constant_scale(sd, mean)) {
    for (std::size_t i = 0; i < len; ++i) sum += query[i] * query[i];
    return sum;
  }
  for (std::size_t i = 0; i < len; ++i) {
    const double d = query[i] - (w[i] - mean) / sd;
    sum += d * d;
    if (sum > cutoff) return sum;
  }
  return sum;
}

inline std::vector<double> prepare_query(std::span<const double> s, bool normalize) {
  return normalize ? znormalize(s) : std::vector<double>(s.begin(), s.end());
}

inline double entropy_bits(std::span<const std::size_t> counts, std::size_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace detail

struct SdistResult {
  double distance = 0.0;
  std::size_t best_start = 0;
};

/// Minimum Euclidean distance between `shapelet` and every equal-length window
/// of `series` (both z-normalized when `normalize`). Ties go to the earliest start.
inline SdistResult sdist(std::span<const double> shapelet, std::span<const double> series, bool normalize) {
  if (shapelet.empty()) throw ContractError("sdist: empty shapelet");
  if (shapelet.size() > series.size()) throw ContractError("sdist: shapelet longer than series");
  const auto query = detail::prepare_query(shapelet, normalize);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_start = 0;
  for (std::size_t s = 0; s + query.size() <= series.size(); ++s) {
    const double d = detail::window_sq_distance(query, series, s, normalize, best);
    if (d < best) {
      best = d;
      best_start = s;
    }
  }
  return {std::sqrt(best), best_start};
}

/// Distance of every window start, in start order.
inline std::vector<double> window_distances(std::span<const double> shapelet, std::span<const double> series,
                                            bool normalize) {
  if (shapelet.size() > series.size()) throw ContractError("window_distances: shapelet longer than series");
  const auto query = detail::prepare_query(shapelet, normalize);
  std::vector<double> out;
  out.reserve(series.size() - query.size() + 1);
  for (std::size_t s = 0; s + query.size() <= series.size(); ++s)
    out.push_back(std::sqrt(detail::window_sq_distance(query, series, s, normalize)));
  return out;
}

struct SplitResult {
  double gain = 0.0;  // bits
  double threshold = 0.0;
};

/// Best binary split of the distance orderline. Candidate thresholds are the
/// midpoints between consecutive distinct distances; ties go to the smaller
/// threshold. `labels` are dense class indices in [0, num_classes).
inline SplitResult information_gain(std::span<const double> distances, std::span<const std::size_t> labels,
                                    std::size_t num_classes) {
  if (distances.size() != labels.size() || distances.size() < 2)
    throw ContractError("information_gain: need >= 2 equal-length distances and labels");
  const std::size_t n = distances.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return distances[a] < distances[b] || (distances[a] == distances[b] && a < b);
  });

  std::vector<std::size_t> total(num_classes, 0), left(num_classes, 0), right;
  for (auto l : labels) ++total.at(l);
  const double max_distance = distances[order.back()];
  const auto present = std::count_if(total.begin(), total.end(), [](auto c) { return c > 0; });
  if (present < 2) return {0.0, max_distance};

  const double h_all = detail::entropy_bits(total, n);
  SplitResult best{-1.0, max_distance};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    ++left[labels[order[i]]];
    const double here = distances[order[i]], next = distances[order[i + 1]];
    if (!(here < next)) continue;
    right = total;
    for (std::size_t c = 0; c < num_classes; ++c) right[c] -= left[c];
    const std::size_t nl = i + 1, nr = n - nl;
    const double gain = h_all - (static_cast<double>(nl) / static_cast<double>(n)) * detail::entropy_bits(left, nl) -
                        (static_cast<double>(nr) / static_cast<double>(n)) * detail::entropy_bits(right, nr);
    if (gain > best.gain) best = {gain, 0.5 * (here + next)};
  }
  if (best.gain < 0.0) return {0.0, max_distance};
  best.gain = std::max(0.0, best.gain);
  return best;
}

/// Convenience overload over string labels.
inline SplitResult information_gain(std::span<const double> distances, std::span<const ClassLabel> labels) {
  std::vector<ClassLabel> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::vector<std::size_t> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    idx[i] = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
  return information_gain(distances, idx, classes.size());
}

/// Windows on the shapelet's dimension within occ_threshold, thinned to
/// non-overlapping hits best-distance first. Result is ordered by
/// (distance, start).
inline std::vector<Occurrence> find_occurrences(const Shapelet& sh, const MTSInstance& instance) {
  if (sh.dim >= instance.values.dims()) throw ContractError("find_occurrences: shapelet dimension out of range");
  const auto row = instance.values.row(sh.dim);
  if (sh.length() == 0 || sh.length() > row.size()) return {};
  const auto dist = window_distances(sh.values, row, sh.normalized);
  std::vector<std::size_t> hits;
  for (std::size_t s = 0; s < dist.size(); ++s)
    if (dist[s] <= sh.occ_threshold) hits.push_back(s);
  std::sort(hits.begin(), hits.end(), [&](auto a, auto b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
  std::vector<Occurrence> accepted;
  const std::size_t len = sh.length();
  for (auto s : hits) {
    const bool overlaps = std::any_of(accepted.begin(), accepted.end(), [&](const Occurrence& o) {
      return s < o.start + len && o.start < s + len;
    });
    if (!overlaps) accepted.push_back({sh.id, instance.id, s, dist[s]});
  }
  return accepted;
}

/// Keeps shapelets whose occurrences all fall in instances of one class and
/// sets class_assoc to that class.
inline std::vector<Shapelet> class_filter(std::vector<Shapelet> scored, const MTSDataset& train) {
  std::map<std::string, const ClassLabel*> label_of;
  for (std::size_t i = 0; i < train.size(); ++i) label_of[train.instance(i).id] = &train.label(i);
  std::vector<Shapelet> out;
  for (auto& s : scored) {
    const ClassLabel* cls = nullptr;
    bool single = !s.occurrences.empty();
    for (const auto& o : s.occurrences) {
      const auto it = label_of.find(o.instance_id);
      if (it == label_of.end()) throw ContractError("class_filter: occurrence in unknown instance " + o.instance_id);
      if (!cls) cls = it->second;
      if (*cls != *it->second) {
        single = false;
        break;
      }
    }
    if (!single) continue;
    s.class_assoc = *cls;
    out.push_back(std::move(s));
  }
  return out;
}

/// Rounded mean occurrence start, clamped to [0, T - L].
inline OccurrenceDistribution occurrence_distribution(std::span<const Occurrence> occs, std::size_t series_length,
                                                      std::size_t shapelet_length) {
  if (occs.empty()) throw ContractError("occurrence_distribution: no occurrences");
  if (shapelet_length > series_length) throw ContractError("occurrence_distribution: shapelet longer than series");
  double sum = 0.0;
  for (const auto& o : occs) sum += static_cast<double>(o.start);
  const double mean = std::round(sum / static_cast<double>(occs.size()));
  const double hi = static_cast<double>(series_length - shapelet_length);
  return {occs.front().shapelet_id, static_cast<std::size_t>(std::clamp(mean, 0.0, hi)), occs.size()};
}

struct Candidate {
  std::size_t instance = 0;
  std::size_t dim = 0;
  std::size_t start = 0;
  std::size_t length = 0;
};

struct MiningStats {
  std::size_t candidates_evaluated = 0;
  std::size_t class_pure_candidates = 0;
  std::size_t retained = 0;
  /// survivors per class and dimension
  std::map<ClassLabel, std::map<std::size_t, std::size_t>> survivors;
};

struct MiningResult {
  ShapeletStore store;
  MiningStats stats;
  /// Set when no class-shapelet survived.
  std::optional<std::string> warning;
};

namespace detail {

struct ScoredCandidate {
  Candidate cand;
  SplitResult split;
  double occ_threshold = 0.0;
  bool pure = false;  // instances within occ_threshold share one label
  double gap = 0.0;   // tie-breaker for equal gain
};

class CandidateEvaluator {
 public:
  CandidateEvaluator(const MTSDataset& train, const MiningConfig& cfg) : train_(train), cfg_(cfg) {
    classes_ = train.class_set();
    for (const auto& l : train.labels())
      label_idx_.push_back(
          static_cast<std::size_t>(std::lower_bound(classes_.begin(), classes_.end(), l) - classes_.begin()));
  }

  ScoredCandidate operator()(const Candidate& c) const {
    const auto src = train_.instance(c.instance).values.row(c.dim).subspan(c.start, c.length);
    std::vector<double> dist(train_.size());
    for (std::size_t i = 0; i < train_.size(); ++i)
      dist[i] = sdist(src, train_.instance(i).values.row(c.dim), cfg_.normalize).distance;
    ScoredCandidate out{c, information_gain(dist, label_idx_, classes_.size()), 0.0, false};
    if (cfg_.occ_threshold == MiningConfig::OccThreshold::SplitPoint) {
      out.occ_threshold = out.split.threshold;
    } else {
      std::vector<double> sorted(dist);
      std::sort(sorted.begin(), sorted.end());
      const double rank = std::ceil(cfg_.occ_percentile / 100.0 * static_cast<double>(sorted.size()));
      const auto idx = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0, static_cast<double>(sorted.size() - 1)));
      out.occ_threshold = sorted[idx];
    }
    double near = 0.0, far = 0.0;
    std::size_t n_near = 0;
    for (double d : dist) (d <= out.split.threshold ? (++n_near, near) : far) += d;
    if (n_near > 0 && n_near < dist.size())
      out.gap = (far / static_cast<double>(dist.size() - n_near) - near / static_cast<double>(n_near)) /
                std::sqrt(static_cast<double>(c.length));
    out.pure = true;
    const auto own = label_idx_[c.instance];
    for (std::size_t i = 0; i < dist.size() && out.pure; ++i)
      if (dist[i] <= out.occ_threshold && label_idx_[i] != own) out.pure = false;
    return out;
  }

 private:
  const MTSDataset& train_;
  const MiningConfig& cfg_;
  std::vector<ClassLabel> classes_;
  std::vector<std::size_t> label_idx_;
};

inline void evaluate_parallel(const CandidateEvaluator& eval, std::span<const Candidate> cands,
                              std::span<ScoredCandidate> out, std::size_t workers) {
  workers = std::max<std::size_t>(1, std::min(workers, cands.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < cands.size(); ++i) out[i] = eval(cands[i]);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (cands.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(cands.size(), lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) out[i] = eval(cands[i]);
    });
  }
}

}  // namespace detail

/// Effective [min, max] shapelet length for series of length T.
inline std::pair<std::size_t, std::size_t> shapelet_length_bounds(const MiningConfig& cfg, std::size_t series_length) {
  const std::size_t cap = series_length / 2;
  const std::size_t lo = std::max<std::size_t>(3, cfg.min_length);
  const std::size_t hi = cfg.max_length == 0 ? cap : std::min(cfg.max_length, cap);
  if (cap < 3) throw ContractError("mining: series too short for shapelets of length >= 3 within half the length");
  if (lo > hi) throw ContractError("mining: min_length exceeds the effective max_length");
  return {lo, hi};
}

/// Draws one candidate uniformly: instance, dimension, length, then start.
inline Candidate draw_candidate(Rng& rng, std::size_t n, std::size_t dims, std::size_t series_length,
                                std::pair<std::size_t, std::size_t> len_bounds) {
  Candidate c;
  c.instance = static_cast<std::size_t>(rng.below(n));
  c.dim = static_cast<std::size_t>(rng.below(dims));
  c.length = static_cast<std::size_t>(
      rng.between(static_cast<std::int64_t>(len_bounds.first), static_cast<std::int64_t>(len_bounds.second)));
  c.start = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(series_length - c.length)));
  return c;
}

/// Random-sampling shapelet search under a candidate-count or wall-clock
/// budget. With a candidate budget the result depends only on the data, the
/// config and the seed (not on cfg.workers).
inline MiningResult mine_contracted(const MTSDataset& train, const MiningConfig& cfg) {
  const auto classes = train.class_set();
  if (classes.size() < 2) throw ContractError("mine_contracted: need at least 2 classes");
  const std::size_t n = train.size(), dims = train.dims(), length = train.length();
  const auto bounds = shapelet_length_bounds(cfg, length);

  detail::CandidateEvaluator evaluator(train, cfg);
  Rng rng(cfg.seed);
  std::vector<detail::ScoredCandidate> scored;

  if (cfg.budget == MiningConfig::Budget::Candidates) {
    std::vector<Candidate> cands(cfg.candidate_budget);
    for (auto& c : cands) c = draw_candidate(rng, n, dims, length, bounds);
    scored.resize(cands.size());
    detail::evaluate_parallel(evaluator, cands, scored, cfg.workers);
  } else {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(cfg.time_budget_seconds);
    const std::size_t batch = 32 * std::max<std::size_t>(1, cfg.workers);
    while (std::chrono::steady_clock::now() < deadline) {
      std::vector<Candidate> cands(batch);
      for (auto& c : cands) c = draw_candidate(rng, n, dims, length, bounds);
      std::vector<detail::ScoredCandidate> part(batch);
      detail::evaluate_parallel(evaluator, cands, part, cfg.workers);
      scored.insert(scored.end(), part.begin(), part.end());
    }
  }

  MiningStats stats;
  stats.candidates_evaluated = scored.size();

  // total order independent of evaluation order
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.split.gain != b.split.gain) return a.split.gain > b.split.gain;
    if (a.gap != b.gap) return a.gap > b.gap;
    if (a.cand.instance != b.cand.instance) return a.cand.instance < b.cand.instance;
    if (a.cand.start != b.cand.start) return a.cand.start < b.cand.start;
    if (a.cand.length != b.cand.length) return a.cand.length < b.cand.length;
    return a.cand.dim < b.cand.dim;
  });

  // top-q per (class, dimension) among class-pure candidates, with
  // self-similarity pruning against retained windows of the same series
  std::map<std::pair<ClassLabel, std::size_t>, std::size_t> slots;
  std::vector<const detail::ScoredCandidate*> kept;
  for (const auto& sc : scored) {
    if (!sc.pure || sc.split.gain <= 0.0) continue;
    ++stats.class_pure_candidates;
    const auto key = std::make_pair(train.label(sc.cand.instance), sc.cand.dim);
    if (slots[key] >= cfg.top_q) continue;
    const bool self_similar = std::any_of(kept.begin(), kept.end(), [&](const auto* k) {
      if (k->cand.instance != sc.cand.instance || k->cand.dim != sc.cand.dim) return false;
      const auto lo = std::max(k->cand.start, sc.cand.start);
      const auto hi = std::min(k->cand.start + k->cand.length, sc.cand.start + sc.cand.length);
      const auto overlap = hi > lo ? hi - lo : 0;
      return 2 * overlap > std::min(k->cand.length, sc.cand.length);
    });
    if (self_similar) continue;
    ++slots[key];
    kept.push_back(&sc);
  }
  stats.retained = kept.size();

  std::vector<Shapelet> shapelets;
  shapelets.reserve(kept.size());
  for (const auto* k : kept) {
    Shapelet s;
    s.id = shapelets.size();
    const auto row = train.instance(k->cand.instance).values.row(k->cand.dim);
    s.values.assign(row.begin() + static_cast<std::ptrdiff_t>(k->cand.start),
                    row.begin() + static_cast<std::ptrdiff_t>(k->cand.start + k->cand.length));
    s.dim = k->cand.dim;
    s.source_instance = train.instance(k->cand.instance).id;
    s.source_start = k->cand.start;
    s.quality = k->split.gain;
    s.split_threshold = k->split.threshold;
    s.occ_threshold = k->occ_threshold;
    s.normalized = cfg.normalize;
    for (const auto& inst : train.instances()) {
      auto occs = find_occurrences(s, inst);
      s.occurrences.insert(s.occurrences.end(), occs.begin(), occs.end());
    }
    shapelets.push_back(std::move(s));
  }

  auto survivors = class_filter(std::move(shapelets), train);
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    auto& s = survivors[i];
    s.id = i;
    for (auto& o : s.occurrences) o.shapelet_id = i;
    s.distribution = occurrence_distribution(s.occurrences, length, s.length());
    ++stats.survivors[*s.class_assoc][s.dim];
  }

  MiningResult result{ShapeletStore(std::move(survivors), cfg, dims, length, classes), std::move(stats), std::nullopt};
  if (result.store.empty()) result.warning = "mining produced no class-shapelets";
  return result;
}

}  // namespace sets
