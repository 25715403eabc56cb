#pragma once

// Shapelet data model and its JSON persistence.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sets/dataset.hpp"
#include "sets/error.hpp"

#include <json.hpp>

namespace sets {

using ShapeletId = std::size_t;

struct Occurrence {
  ShapeletId shapelet_id = 0;
  std::string instance_id;
  std::size_t start = 0;
  double distance = 0.0;

  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

/// Position average of a shapelet's occurrences: where it gets introduced.
struct OccurrenceDistribution {
  ShapeletId shapelet_id = 0;
  std::size_t mean_start = 0;
  std::size_t support = 0;

  friend bool operator==(const OccurrenceDistribution&, const OccurrenceDistribution&) = default;
};

struct Shapelet {
  ShapeletId id = 0;
  std::vector<double> values;
  std::size_t dim = 0;
  std::string source_instance;
  std::size_t source_start = 0;
  double quality = 0.0;  // information gain, bits
  double split_threshold = 0.0;
  double occ_threshold = 0.0;
  std::optional<ClassLabel> class_assoc;
  bool normalized = true;
  std::vector<Occurrence> occurrences;
  OccurrenceDistribution distribution;

  std::size_t length() const noexcept { return values.size(); }

  friend bool operator==(const Shapelet&, const Shapelet&) = default;
};

struct MiningConfig {
  enum class Budget { Candidates, Seconds };
  enum class OccThreshold { SplitPoint, Percentile };

  Budget budget = Budget::Candidates;
  std::size_t candidate_budget = 1000;
  double time_budget_seconds = 60.0;
  std::size_t min_length = 3;
  /// 0 means floor(T / 2); larger values are clamped to it.
  std::size_t max_length = 0;
  bool normalize = true;
  std::size_t top_q = 5;
  OccThreshold occ_threshold = OccThreshold::SplitPoint;
  double occ_percentile = 10.0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

class ShapeletStore {
 public:
  static constexpr int format_version = 1;

  ShapeletStore() = default;
  ShapeletStore(std::vector<Shapelet> shapelets, MiningConfig config, std::size_t dims, std::size_t length,
                std::vector<ClassLabel> classes)
      : shapelets_(std::move(shapelets)),
        config_(config),
        dims_(dims),
        length_(length),
        classes_(std::move(classes)) {
    for (std::size_t i = 0; i < shapelets_.size(); ++i)
      if (shapelets_[i].id != i) throw ContractError("ShapeletStore: shapelet ids must equal their position");
    rebuild_index();
  }

  const std::vector<Shapelet>& shapelets() const noexcept { return shapelets_; }
  const Shapelet& shapelet(ShapeletId id) const { return shapelets_.at(id); }
  bool empty() const noexcept { return shapelets_.empty(); }
  std::size_t size() const noexcept { return shapelets_.size(); }
  const MiningConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return config_.seed; }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t series_length() const noexcept { return length_; }
  const std::vector<ClassLabel>& classes() const noexcept { return classes_; }

  /// Shapelet ids of one class on one dimension, best quality first.
  const std::vector<ShapeletId>& by_class_dim(const ClassLabel& c, std::size_t dim) const {
    static const std::vector<ShapeletId> none;
    const auto it = index_.find(c);
    if (it == index_.end()) return none;
    const auto jt = it->second.find(dim);
    return jt == it->second.end() ? none : jt->second;
  }

  /// Highest quality on a dimension over all classes, if any shapelet lives there.
  std::optional<double> best_quality(std::size_t dim) const {
    std::optional<double> best;
    for (const auto& s : shapelets_)
      if (s.dim == dim && (!best || s.quality > *best)) best = s.quality;
    return best;
  }

 private:
  void rebuild_index() {
    index_.clear();
    for (const auto& s : shapelets_) {
      if (!s.class_assoc) throw ContractError("ShapeletStore: shapelet without class association");
      index_[*s.class_assoc][s.dim].push_back(s.id);
    }
    for (auto& [c, dims] : index_)
      for (auto& [d, ids] : dims)
        std::stable_sort(ids.begin(), ids.end(), [&](auto a, auto b) {
          return shapelets_[a].quality > shapelets_[b].quality;
        });
  }

  std::vector<Shapelet> shapelets_;
  MiningConfig config_;
  std::size_t dims_ = 0;
  std::size_t length_ = 0;
  std::vector<ClassLabel> classes_;
  std::map<ClassLabel, std::map<std::size_t, std::vector<ShapeletId>>> index_;
};

inline nlohmann::json to_json(const MiningConfig& c) {
  return {
      {"budget", c.budget == MiningConfig::Budget::Candidates ? "candidates" : "seconds"},
      {"candidate_budget", c.candidate_budget},
      {"time_budget_seconds", c.time_budget_seconds},
      {"min_length", c.min_length},
      {"max_length", c.max_length},
      {"normalize", c.normalize},
      {"top_q", c.top_q},
      {"occ_threshold", c.occ_threshold == MiningConfig::OccThreshold::SplitPoint ? "split" : "percentile"},
      {"occ_percentile", c.occ_percentile},
      {"seed", c.seed},
  };
}

inline MiningConfig mining_config_from_json(const nlohmann::json& j) {
  MiningConfig c;
  c.budget = j.at("budget") == "candidates" ? MiningConfig::Budget::Candidates : MiningConfig::Budget::Seconds;
  c.candidate_budget = j.at("candidate_budget");
  c.time_budget_seconds = j.at("time_budget_seconds");
  c.min_length = j.at("min_length");
  c.max_length = j.at("max_length");
  c.normalize = j.at("normalize");
  c.top_q = j.at("top_q");
  c.occ_threshold =
      j.at("occ_threshold") == "split" ? MiningConfig::OccThreshold::SplitPoint : MiningConfig::OccThreshold::Percentile;
  c.occ_percentile = j.at("occ_percentile");
  c.seed = j.at("seed");
  return c;
}

inline nlohmann::json to_json(const ShapeletStore& store) {
  nlohmann::json shapelets = nlohmann::json::array();
  for (const auto& s : store.shapelets()) {
    nlohmann::json occs = nlohmann::json::array();
    for (const auto& o : s.occurrences)
      occs.push_back({{"instance", o.instance_id}, {"start", o.start}, {"distance", o.distance}});
    shapelets.push_back({
        {"id", s.id},
        {"class", *s.class_assoc},
        {"dim", s.dim},
        {"length", s.length()},
        {"values", s.values},
        {"source_instance", s.source_instance},
        {"source_start", s.source_start},
        {"quality", s.quality},
        {"split_threshold", s.split_threshold},
        {"occ_threshold", s.occ_threshold},
        {"normalized", s.normalized},
        {"occurrences", std::move(occs)},
        {"distribution", {{"mean_start", s.distribution.mean_start}, {"support", s.distribution.support}}},
    });
  }
  nlohmann::json index = nlohmann::json::object();
  for (const auto& c : store.classes()) {
    nlohmann::json per_dim = nlohmann::json::object();
    for (std::size_t d = 0; d < store.dims(); ++d) {
      const auto& ids = store.by_class_dim(c, d);
      if (!ids.empty()) per_dim[std::to_string(d)] = ids;
    }
    index[c] = std::move(per_dim);
  }
  return {
      {"format_version", ShapeletStore::format_version},
      {"seed", store.seed()},
      {"config", to_json(store.config())},
      {"dims", store.dims()},
      {"series_length", store.series_length()},
      {"classes", store.classes()},
      {"shapelets", std::move(shapelets)},
      {"index", std::move(index)},
  };
}

inline ShapeletStore store_from_json(const nlohmann::json& j) {
  if (j.at("format_version") != ShapeletStore::format_version)
    throw ContractError("shapelet store: unsupported format_version");
  std::vector<Shapelet> shapelets;
  for (const auto& js : j.at("shapelets")) {
    Shapelet s;
    s.id = js.at("id");
    s.class_assoc = js.at("class").get<std::string>();
    s.dim = js.at("dim");
    s.values = js.at("values").get<std::vector<double>>();
    s.source_instance = js.at("source_instance");
    s.source_start = js.at("source_start");
    s.quality = js.at("quality");
    s.split_threshold = js.at("split_threshold");
    s.occ_threshold = js.at("occ_threshold");
    s.normalized = js.at("normalized");
    for (const auto& jo : js.at("occurrences"))
      s.occurrences.push_back({s.id, jo.at("instance"), jo.at("start"), jo.at("distance")});
    s.distribution = {s.id, js.at("distribution").at("mean_start"), js.at("distribution").at("support")};
    shapelets.push_back(std::move(s));
  }
  return ShapeletStore(std::move(shapelets), mining_config_from_json(j.at("config")), j.at("dims"),
                       j.at("series_length"), j.at("classes").get<std::vector<ClassLabel>>());
}

inline void save_store(const ShapeletStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(store).dump(1) << '\n';
}

inline ShapeletStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadError::Kind::MissingFile, path.string(), -1, "cannot open shapelet store");
  try {
    return store_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadError::Kind::Shape, path.string(), -1, std::string("malformed shapelet store: ") + e.what());
  } catch (const ContractError& e) {
    throw LoadError(LoadError::Kind::Shape, path.string(), -1, e.what());
  }
}

}  // namespace sets
