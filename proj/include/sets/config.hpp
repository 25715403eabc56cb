#pragma once

// Run configuration: a small INI/TOML-like key-value document.
//
//   # comment
//   [section]
//   key = value        -> key "section.key"
//   name = "quoted"    -> quotes are stripped
//
// Keys outside any section are top-level. Unknown keys are rejected.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sets/blackbox.hpp"
#include "sets/cfgen.hpp"
#include "sets/error.hpp"
#include "sets/eval/plausibility.hpp"
#include "sets/store.hpp"

namespace sets {

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::string_view text, const std::string& origin = "<config>") {
  KeyValues out;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      // a '#' inside quotes is part of the value
      const auto q = line.find('"');
      if (q == std::string_view::npos || hash < q) line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    auto key = std::string(detail::trim(line.substr(0, eq)));
    auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[section.empty() ? key : section + "." + key] = std::string(value);
  }
  return out;
}

struct EvalConfig {
  double tol = 0.0;
  bool baseline = true;
  bool valid_only = false;
  DetectorConfig detectors;
};

struct RunConfig {
  std::filesystem::path dataset;
  double train_fraction = 0.7;
  std::uint64_t split_seed = 0;
  MiningConfig mining;
  ModelBinding model;
  EngineConfig engine;
  EvalConfig eval;
  std::filesystem::path output_dir = "runs";

  /// Canonical key-value form; everything that influences results.
  KeyValues canonical() const;
};

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError(key + ": invalid number '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

}  // namespace detail

/// Builds a RunConfig from key-values; relative paths resolve against `base_dir`.
inline RunConfig run_config_from(const KeyValues& kv, const std::filesystem::path& base_dir = {}) {
  RunConfig c;
  using detail::parse_bool;
  using detail::parse_number;
  for (const auto& [k, v] : kv) {
    if (k == "dataset.path") {
      c.dataset = v;
    } else if (k == "split.train_fraction") {
      c.train_fraction = parse_number<double>(k, v);
    } else if (k == "split.seed") {
      c.split_seed = parse_number<std::uint64_t>(k, v);
    } else if (k == "mining.budget") {
      if (v == "candidates")
        c.mining.budget = MiningConfig::Budget::Candidates;
      else if (v == "seconds")
        c.mining.budget = MiningConfig::Budget::Seconds;
      else
        throw ConfigError(k + ": expected 'candidates' or 'seconds'");
    } else if (k == "mining.candidates") {
      c.mining.candidate_budget = parse_number<std::size_t>(k, v);
    } else if (k == "mining.seconds") {
      c.mining.time_budget_seconds = parse_number<double>(k, v);
    } else if (k == "mining.min_length") {
      c.mining.min_length = parse_number<std::size_t>(k, v);
    } else if (k == "mining.max_length") {
      c.mining.max_length = parse_number<std::size_t>(k, v);
    } else if (k == "mining.normalize") {
      c.mining.normalize = parse_bool(k, v);
    } else if (k == "mining.top_q") {
      c.mining.top_q = parse_number<std::size_t>(k, v);
    } else if (k == "mining.occ_threshold") {
      if (v == "split")
        c.mining.occ_threshold = MiningConfig::OccThreshold::SplitPoint;
      else if (v == "percentile")
        c.mining.occ_threshold = MiningConfig::OccThreshold::Percentile;
      else
        throw ConfigError(k + ": expected 'split' or 'percentile'");
    } else if (k == "mining.occ_percentile") {
      c.mining.occ_percentile = parse_number<double>(k, v);
    } else if (k == "mining.seed") {
      c.mining.seed = parse_number<std::uint64_t>(k, v);
    } else if (k == "model.kind") {
      if (v == "knn")
        c.model.kind = ModelBinding::Kind::BuiltinKnn;
      else if (v == "external")
        c.model.kind = ModelBinding::Kind::ExternalProcess;
      else
        throw ConfigError(k + ": expected 'knn' or 'external'");
    } else if (k == "model.k") {
      c.model.k = parse_number<std::size_t>(k, v);
    } else if (k == "model.command") {
      c.model.command = detail::split_words(v);
    } else if (k == "model.timeout_ms") {
      c.model.timeout = std::chrono::milliseconds(parse_number<std::int64_t>(k, v));
    } else if (k == "engine.max_dims_in_subset") {
      c.engine.max_dims_in_subset = parse_number<std::size_t>(k, v);
    } else if (k == "engine.max_shapelets_per_dim") {
      c.engine.max_shapelets_per_dim = parse_number<std::size_t>(k, v);
    } else if (k == "engine.max_model_calls") {
      c.engine.max_model_calls = parse_number<std::size_t>(k, v);
    } else if (k == "eval.tol") {
      c.eval.tol = parse_number<double>(k, v);
    } else if (k == "eval.baseline") {
      c.eval.baseline = parse_bool(k, v);
    } else if (k == "eval.valid_only") {
      c.eval.valid_only = parse_bool(k, v);
    } else if (k == "eval.mp_window") {
      c.eval.detectors.mp_window = parse_number<std::size_t>(k, v);
    } else if (k == "eval.lof_k") {
      c.eval.detectors.lof_k = parse_number<std::size_t>(k, v);
    } else if (k == "eval.lof_margin") {
      c.eval.detectors.lof_margin = parse_number<double>(k, v);
    } else if (k == "eval.if_trees") {
      c.eval.detectors.if_trees = parse_number<std::size_t>(k, v);
    } else if (k == "eval.if_subsample") {
      c.eval.detectors.if_subsample = parse_number<std::size_t>(k, v);
    } else if (k == "eval.if_threshold") {
      c.eval.detectors.if_threshold = parse_number<double>(k, v);
    } else if (k == "eval.if_seed") {
      c.eval.detectors.if_seed = parse_number<std::uint64_t>(k, v);
    } else if (k == "eval.ocsvm_nu") {
      c.eval.detectors.ocsvm_nu = parse_number<double>(k, v);
    } else if (k == "eval.ocsvm_gamma") {
      c.eval.detectors.ocsvm_gamma = parse_number<double>(k, v);
    } else if (k == "output.dir") {
      c.output_dir = v;
    } else {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }

  if (c.dataset.empty()) throw ConfigError("dataset.path is required");
  if (c.dataset.is_relative() && !base_dir.empty()) c.dataset = base_dir / c.dataset;
  if (c.output_dir.is_relative() && !base_dir.empty()) c.output_dir = base_dir / c.output_dir;
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) throw ConfigError("split.train_fraction must lie in (0, 1)");
  if (c.mining.min_length < 3) throw ConfigError("mining.min_length must be >= 3");
  if (c.mining.max_length != 0 && c.mining.max_length < c.mining.min_length)
    throw ConfigError("mining.max_length must be 0 or >= mining.min_length");
  if (c.mining.top_q < 1) throw ConfigError("mining.top_q must be >= 1");
  if (!(c.mining.occ_percentile > 0.0 && c.mining.occ_percentile <= 100.0))
    throw ConfigError("mining.occ_percentile must lie in (0, 100]");
  if (c.mining.budget == MiningConfig::Budget::Seconds && !(c.mining.time_budget_seconds > 0.0))
    throw ConfigError("mining.seconds must be > 0");
  if (c.model.k < 1) throw ConfigError("model.k must be >= 1");
  if (c.model.kind == ModelBinding::Kind::ExternalProcess && c.model.command.empty())
    throw ConfigError("model.command is required for model.kind = external");
  if (c.model.timeout.count() <= 0) throw ConfigError("model.timeout_ms must be > 0");
  if (c.engine.max_model_calls < 1) throw ConfigError("engine.max_model_calls must be >= 1");
  if (c.eval.tol < 0.0) throw ConfigError("eval.tol must be >= 0");
  if (!(c.eval.detectors.ocsvm_nu > 0.0 && c.eval.detectors.ocsvm_nu <= 1.0))
    throw ConfigError("eval.ocsvm_nu must lie in (0, 1]");
  if (c.eval.detectors.ocsvm_gamma < 0.0) throw ConfigError("eval.ocsvm_gamma must be >= 0");
  if (c.eval.detectors.lof_k < 1) throw ConfigError("eval.lof_k must be >= 1");
  if (c.eval.detectors.if_trees < 1 || c.eval.detectors.if_subsample < 1)
    throw ConfigError("eval.if_trees and eval.if_subsample must be >= 1");
  if (c.eval.detectors.mp_window == 1) throw ConfigError("eval.mp_window must be 0 or >= 2");
  if (!std::filesystem::is_directory(c.dataset))
    throw ConfigError("dataset.path '" + c.dataset.string() + "' is not a directory");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path, const KeyValues& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto kv = parse_key_values(ss.str(), path.string());
  for (const auto& [k, v] : overrides) kv[k] = v;
  return run_config_from(kv, path.parent_path());
}

inline KeyValues RunConfig::canonical() const {
  using detail::fmt;
  KeyValues kv;
  kv["dataset.path"] = dataset.lexically_normal().string();
  kv["split.train_fraction"] = fmt(train_fraction);
  kv["split.seed"] = std::to_string(split_seed);
  kv["mining.budget"] = mining.budget == MiningConfig::Budget::Candidates ? "candidates" : "seconds";
  kv["mining.candidates"] = std::to_string(mining.candidate_budget);
  kv["mining.seconds"] = fmt(mining.time_budget_seconds);
  kv["mining.min_length"] = std::to_string(mining.min_length);
  kv["mining.max_length"] = std::to_string(mining.max_length);
  kv["mining.normalize"] = mining.normalize ? "true" : "false";
  kv["mining.top_q"] = std::to_string(mining.top_q);
  kv["mining.occ_threshold"] = mining.occ_threshold == MiningConfig::OccThreshold::SplitPoint ? "split" : "percentile";
  kv["mining.occ_percentile"] = fmt(mining.occ_percentile);
  kv["mining.seed"] = std::to_string(mining.seed);
  kv["model.kind"] = model.kind == ModelBinding::Kind::BuiltinKnn ? "knn" : "external";
  kv["model.k"] = std::to_string(model.k);
  std::string cmd;
  for (const auto& w : model.command) cmd += (cmd.empty() ? "" : " ") + w;
  kv["model.command"] = cmd;
  kv["model.timeout_ms"] = std::to_string(model.timeout.count());
  kv["engine.max_dims_in_subset"] = std::to_string(engine.max_dims_in_subset);
  kv["engine.max_shapelets_per_dim"] = std::to_string(engine.max_shapelets_per_dim);
  kv["engine.max_model_calls"] = std::to_string(engine.max_model_calls);
  kv["eval.tol"] = fmt(eval.tol);
  kv["eval.baseline"] = eval.baseline ? "true" : "false";
  kv["eval.valid_only"] = eval.valid_only ? "true" : "false";
  kv["eval.mp_window"] = std::to_string(eval.detectors.mp_window);
  kv["eval.lof_k"] = std::to_string(eval.detectors.lof_k);
  kv["eval.lof_margin"] = fmt(eval.detectors.lof_margin);
  kv["eval.if_trees"] = std::to_string(eval.detectors.if_trees);
  kv["eval.if_subsample"] = std::to_string(eval.detectors.if_subsample);
  kv["eval.if_threshold"] = fmt(eval.detectors.if_threshold);
  kv["eval.if_seed"] = std::to_string(eval.detectors.if_seed);
  kv["eval.ocsvm_nu"] = fmt(eval.detectors.ocsvm_nu);
  kv["eval.ocsvm_gamma"] = fmt(eval.detectors.ocsvm_gamma);
  return kv;
}

/// FNV-1a over the canonical form minus the eval section; names the run
/// directory, so re-evaluating with other detector settings reuses a run.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& [k, v] : c.canonical()) {
    if (k.starts_with("eval.")) continue;
    for (char ch : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sets
