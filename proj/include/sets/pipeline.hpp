#pragma once

// The mine / explain / evaluate workflow over a run directory.
//
// Every artifact lives in <output.dir>/run-<config hash>/:
//   shapelets.json, mining_log.json, counterfactuals.json,
//   counterfactuals.partial.jsonl (only while explain is incomplete),
//   report.json, report.csv

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sets/blackbox.hpp"
#include "sets/cfgen.hpp"
#include "sets/config.hpp"
#include "sets/dataset.hpp"
#include "sets/error.hpp"
#include "sets/eval/baseline.hpp"
#include "sets/eval/plausibility.hpp"
#include "sets/eval/proximity.hpp"
#include "sets/eval/report.hpp"
#include "sets/mining.hpp"
#include "sets/store.hpp"

#include <json.hpp>

namespace sets {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitEmptyStore = 4,
  kExitModelUnavailable = 5,
};

/// A required artifact of an earlier stage is missing or unusable.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path shapelets, mining_log, counterfactuals, partial, report_json, report_csv;
};

inline RunPaths run_paths(const RunConfig& cfg) {
  RunPaths p;
  p.dir = cfg.output_dir / ("run-" + config_hash(cfg));
  p.shapelets = p.dir / "shapelets.json";
  p.mining_log = p.dir / "mining_log.json";
  p.counterfactuals = p.dir / "counterfactuals.json";
  p.partial = p.dir / "counterfactuals.partial.jsonl";
  p.report_json = p.dir / "report.json";
  p.report_csv = p.dir / "report.csv";
  return p;
}

struct SplitData {
  MTSDataset train;
  MTSDataset test;
};

inline SplitData load_split(const RunConfig& cfg) {
  const auto full = load_dataset(cfg.dataset);
  auto [train, test] = train_test_split(full, cfg.train_fraction, cfg.split_seed);
  return {std::move(train), std::move(test)};
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

inline nlohmann::json read_json(const std::filesystem::path& path, const char* stage) {
  std::ifstream in(path);
  if (!in) throw MissingInputError(path.string() + " not found; run `" + stage + "` first");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw MissingInputError(path.string() + ": " + e.what());
  }
}

/// Runs body(worker, task) over tasks [0, n) on `jobs` threads. Tasks are
/// pulled from a shared counter; the first exception stops all workers and is
/// rethrown after they join.
inline void parallel_tasks(std::size_t n, std::size_t jobs,
                           const std::function<void(std::size_t worker, std::size_t task)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&](std::size_t w) {
    while (!stop) {
      const std::size_t t = next++;
      if (t >= n) return;
      try {
        body(w, t);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < jobs; ++w) threads.emplace_back(work, w);
  }
  if (error) std::rethrow_exception(error);
}

/// One model per worker, shared when the model tolerates concurrent calls.
inline std::vector<std::shared_ptr<Classifier>> worker_models(const RunConfig& cfg, const MTSDataset& train,
                                                              std::size_t jobs) {
  std::vector<std::shared_ptr<Classifier>> models;
  std::shared_ptr<Classifier> first = make_classifier(cfg.model, train);
  models.push_back(first);
  for (std::size_t w = 1; w < jobs; ++w)
    models.push_back(first->concurrent_safe() ? first : std::shared_ptr<Classifier>(make_classifier(cfg.model, train)));
  return models;
}

}  // namespace detail

/// Mines the training split and writes shapelets.json and mining_log.json.
/// Throws EmptyStoreError (after writing the log) when nothing survives.
inline MiningResult cmd_mine(const RunConfig& cfg, std::size_t jobs, std::ostream& log = std::cout) {
  const auto paths = run_paths(cfg);
  const auto data = load_split(cfg);
  MiningConfig mc = cfg.mining;
  mc.workers = std::max<std::size_t>(1, jobs);
  auto result = mine_contracted(data.train, mc);

  nlohmann::json survivors = nlohmann::json::object();
  for (const auto& [cls, per_dim] : result.stats.survivors) {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [dim, n] : per_dim) d[std::to_string(dim)] = n;
    survivors[cls] = d;
  }
  nlohmann::json mlog = {{"candidates_evaluated", result.stats.candidates_evaluated},
                         {"class_pure_candidates", result.stats.class_pure_candidates},
                         {"retained", result.stats.retained},
                         {"class_shapelets", result.store.size()},
                         {"survivors", survivors}};
  if (result.warning) mlog["warning"] = *result.warning;
  detail::write_text(paths.mining_log, mlog.dump(1) + "\n");

  log << "mined " << result.stats.candidates_evaluated << " candidates, " << result.store.size()
      << " class-shapelets -> " << paths.shapelets.string() << '\n';
  if (result.store.empty()) {
    std::error_code ec;
    std::filesystem::remove(paths.shapelets, ec);
    throw EmptyStoreError(result.warning.value_or("empty shapelet store"));
  }
  save_store(result.store, paths.shapelets);
  return result;
}

struct ExplainTask {
  std::size_t test_index = 0;
  ClassLabel target;
};

/// One task per test instance and non-original class, in test order then
/// target order.
inline std::vector<ExplainTask> explain_tasks(const MTSDataset& test, const std::vector<ClassLabel>& classes) {
  std::vector<ExplainTask> tasks;
  for (std::size_t i = 0; i < test.size(); ++i)
    for (const auto& c : classes)
      if (c != test.label(i)) tasks.push_back({i, c});
  return tasks;
}

struct ExplainSummary {
  std::size_t attempts = 0;
  std::size_t valid = 0;
  std::size_t resumed = 0;
  double flip_rate() const { return attempts ? static_cast<double>(valid) / static_cast<double>(attempts) : 0.0; }
};

/// Explains every test instance towards every other class and writes
/// counterfactuals.json. Finished attempts are appended to a partial file as
/// they complete; a later call resumes from it. On model failure the partial
/// file is kept and the error propagates.
inline ExplainSummary cmd_explain(const RunConfig& cfg, std::size_t jobs, std::ostream& log = std::cout) {
  const auto paths = run_paths(cfg);
  if (!std::filesystem::exists(paths.shapelets))
    throw MissingInputError(paths.shapelets.string() + " not found; run `mine` first");
  const auto store = load_store(paths.shapelets);
  const auto data = load_split(cfg);
  const auto tasks = explain_tasks(data.test, data.train.class_set());

  std::vector<std::optional<Counterfactual>> results(tasks.size());
  ExplainSummary summary;
  if (std::ifstream in(paths.partial); in) {
    for (std::string line; std::getline(in, line);) {
      try {
        const auto j = nlohmann::json::parse(line);
        const auto t = j.at("task").get<std::size_t>();
        if (t < results.size() && !results[t]) {
          results[t] = counterfactual_from_json(j.at("counterfactual"));
          ++summary.resumed;
        }
      } catch (const std::exception&) {
        // a torn final line from an interrupted write
      }
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t t = 0; t < tasks.size(); ++t)
    if (!results[t]) pending.push_back(t);

  if (!pending.empty()) {
    jobs = std::max<std::size_t>(1, std::min(jobs, pending.size()));
    auto models = detail::worker_models(cfg, data.train, jobs);
    std::filesystem::create_directories(paths.dir);
    std::ofstream partial(paths.partial, std::ios::app);
    std::mutex partial_mutex;
    detail::parallel_tasks(pending.size(), jobs, [&](std::size_t w, std::size_t k) {
      const auto t = pending[k];
      const auto& x = data.test.instance(tasks[t].test_index);
      auto cf = explain(x, data.test.label(tasks[t].test_index), tasks[t].target, store, *models[w], data.train,
                        cfg.engine);
      const nlohmann::json rec = {{"task", t}, {"counterfactual", to_json(cf)}};
      {
        std::lock_guard lock(partial_mutex);
        partial << rec.dump() << '\n' << std::flush;
      }
      results[t] = std::move(cf);
    });
  }

  nlohmann::json cfs = nlohmann::json::array();
  for (const auto& r : results) {
    summary.valid += r->valid;
    cfs.push_back(to_json(*r));
  }
  summary.attempts = results.size();
  const nlohmann::json doc = {{"format_version", 1},
                              {"summary",
                               {{"attempts", summary.attempts},
                                {"valid", summary.valid},
                                {"flip_rate", summary.flip_rate()}}},
                              {"counterfactuals", cfs}};
  detail::write_text(paths.counterfactuals, doc.dump(1) + "\n");
  std::error_code ec;
  std::filesystem::remove(paths.partial, ec);
  log << "explained " << summary.attempts << " attempts (" << summary.resumed << " resumed), " << summary.valid
      << " valid, flip rate " << summary.flip_rate() << " -> " << paths.counterfactuals.string() << '\n';
  return summary;
}

inline EvaluationRow evaluation_row(const std::string& method, const MTSInstance& x, const Counterfactual& cf,
                                    const PlausibilityDetectors& detectors, double tol) {
  EvaluationRow row;
  row.method = method;
  row.base_id = cf.base_id;
  row.original_class = cf.original_class;
  row.target_class = cf.target_class;
  row.valid = cf.valid;
  row.proximity = proximity(x.values, cf.values);
  row.sparsity = sparsity(x.values, cf.values, tol);
  row.perturbed_dims = cf.perturbed_dims().size();
  row.plausibility = detectors.evaluate(cf.values);
  return row;
}

/// Scores the counterfactuals (and, if enabled, the dimension-substitution
/// baseline on the same attempts) and writes report.json and report.csv.
inline EvaluationReport cmd_evaluate(const RunConfig& cfg, std::size_t jobs, std::ostream& log = std::cout) {
  const auto paths = run_paths(cfg);
  const auto doc = detail::read_json(paths.counterfactuals, "explain");
  std::vector<Counterfactual> cfs;
  try {
    for (const auto& j : doc.at("counterfactuals")) cfs.push_back(counterfactual_from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw MissingInputError(paths.counterfactuals.string() + ": " + e.what());
  }
  if (cfs.empty()) throw MissingInputError(paths.counterfactuals.string() + " holds no counterfactuals");

  const auto data = load_split(cfg);
  std::vector<const MTSInstance*> bases;
  for (const auto& cf : cfs) {
    const auto i = data.test.find(cf.base_id);
    if (!i) throw MissingInputError("counterfactual base '" + cf.base_id + "' is not in the test split");
    bases.push_back(&data.test.instance(*i));
  }

  const PlausibilityDetectors detectors(data.train, cfg.eval.detectors);
  const std::size_t per = cfg.eval.baseline ? 2 : 1;
  std::vector<EvaluationRow> rows(cfs.size() * per);
  jobs = std::max<std::size_t>(1, std::min(jobs, cfs.size()));
  std::vector<std::shared_ptr<Classifier>> models;
  if (cfg.eval.baseline) models = detail::worker_models(cfg, data.train, jobs);
  detail::parallel_tasks(cfs.size(), jobs, [&](std::size_t w, std::size_t i) {
    rows[i * per] = evaluation_row("sets", *bases[i], cfs[i], detectors, cfg.eval.tol);
    if (cfg.eval.baseline) {
      const auto b =
          baseline_dim_substitution(*bases[i], cfs[i].original_class, cfs[i].target_class, data.train, *models[w]);
      rows[i * per + 1] = evaluation_row("baseline", *bases[i], b, detectors, cfg.eval.tol);
    }
  });
  if (cfg.eval.valid_only) std::erase_if(rows, [](const EvaluationRow& r) { return !r.valid; });
  if (rows.empty()) throw MissingInputError("no valid counterfactuals to evaluate");

  auto report = build_report(std::move(rows));
  detail::write_text(paths.report_json, to_json(report).dump(1) + "\n");
  std::ostringstream csv;
  write_report_csv(report, csv);
  detail::write_text(paths.report_csv, csv.str());
  print_report_tables(report, log);
  log << "\nreport -> " << paths.report_json.string() << '\n';
  return report;
}

inline void cmd_run(const RunConfig& cfg, std::size_t jobs, std::ostream& log = std::cout) {
  cmd_mine(cfg, jobs, log);
  cmd_explain(cfg, jobs, log);
  cmd_evaluate(cfg, jobs, log);
}

/// Maps an exception from any command to the process exit code.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const LoadError*>(&e) || dynamic_cast<const StratificationError*>(&e) ||
      dynamic_cast<const MissingInputError*>(&e))
    return kExitData;
  if (dynamic_cast<const EmptyStoreError*>(&e)) return kExitEmptyStore;
  if (dynamic_cast<const ModelUnavailable*>(&e)) return kExitModelUnavailable;
  return kExitInternal;
}

}  // namespace sets
