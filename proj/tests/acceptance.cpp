// Acceptance suite: one PASS/FAIL line per criterion; exit status 0 only when
// every criterion passes.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sets/blackbox.hpp"
#include "sets/cfgen.hpp"
#include "sets/dataset.hpp"
#include "sets/eval/baseline.hpp"
#include "sets/eval/iforest.hpp"
#include "sets/eval/lof.hpp"
#include "sets/eval/matrix_profile.hpp"
#include "sets/eval/ocsvm.hpp"
#include "sets/eval/plausibility.hpp"
#include "sets/eval/proximity.hpp"
#include "sets/mining.hpp"
#include "sets/pipeline.hpp"
#include "sets/random.hpp"
#include "sets/synthetic.hpp"
#include "test_support.hpp"

using namespace sets;
using namespace sets::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

std::vector<std::vector<double>> random_points(Rng& rng, std::size_t n, std::size_t dims) {
  std::vector<std::vector<double>> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back(random_vector(rng, dims));
  return p;
}

// ---- 1: sdist ----

Outcome sdist_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  std::size_t ok = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = static_cast<std::size_t>(rng.between(10, 100));
    const auto l = static_cast<std::size_t>(rng.between(3, std::min<std::int64_t>(20, static_cast<std::int64_t>(t))));
    const auto s = random_vector(rng, l);
    const auto series = random_vector(rng, t);
    const bool norm = i % 4 != 3;
    const auto got = sdist(s, series, norm);
    const auto [want, at] = oracle_sdist(s, series, norm);
    const double err = std::abs(got.distance - want);
    worst = std::max(worst, err);
    ok += err <= 1e-9 && got.best_start == at;
  }
  const double secs = seconds_since(t0);
  return {ok == 1000 && secs < 10.0,
          fmt("%zu/1000 pairs match (max error %.2e, tol 1e-9), %.2f s (limit 10 s)", ok, worst, secs)};
}

// ---- 2: information gain ----

Outcome gain_oracle() {
  Rng rng(202);
  std::size_t ok = 0;
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto n = static_cast<std::size_t>(rng.between(2, 12));
    const auto classes = static_cast<std::size_t>(rng.between(1, 4));
    std::vector<double> d(n);
    std::vector<std::string> labels(n);
    for (std::size_t k = 0; k < n; ++k) {
      // coarse values make ties common
      d[k] = i % 2 ? std::round(rng.uniform(0, 3) * 2) / 2 : rng.uniform(0, 3);
      labels[k] = std::string(1, static_cast<char>('A' + rng.below(classes)));
    }
    const std::vector<ClassLabel> lab(labels.begin(), labels.end());
    const auto got = information_gain(d, lab);
    const auto want = oracle_gain(d, labels);
    const double err = std::max(std::abs(got.gain - want.gain), std::abs(got.threshold - want.threshold));
    worst = std::max(worst, err);
    ok += err <= 1e-12;
  }
  return {ok == 500, fmt("%zu/500 orderlines match gain and threshold (max error %.2e, tol 1e-12)", ok, worst)};
}

// ---- 3: detectors and matrix profile ----

Outcome detector_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(303);
  std::size_t mp_bad = 0, lof_bad = 0, if_bad = 0, svm_bad = 0;
  double mp_err = 0, lof_err = 0, svm_gap = 0;
  std::size_t mp_n = 0, lof_n = 0, if_n = 0, svm_n = 0;

  for (int i = 0; i < 100; ++i) {
    const auto n = static_cast<std::size_t>(rng.between(4, 20));
    const auto m = static_cast<std::size_t>(rng.between(2, static_cast<std::int64_t>(n / 2)));
    const auto s = random_vector(rng, n);
    const auto got = matrix_profile(s, m);
    const auto want = oracle_matrix_profile(s, m);
    for (std::size_t k = 0; k < got.size(); ++k) {
      const double e = std::abs(got[k] - want[k]);
      mp_err = std::max(mp_err, e);
      mp_bad += !(e <= 1e-9);
    }
    ++mp_n;
  }

  for (int i = 0; i < 60; ++i) {
    const auto n = static_cast<std::size_t>(rng.between(3, 20));
    const auto k = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(n - 1)));
    const auto pts = random_points(rng, n, static_cast<std::size_t>(rng.between(1, 4)));
    const auto lof = fit_lof(pts, k);
    for (int q = 0; q < 5; ++q) {
      const auto query = random_vector(rng, pts.front().size());
      const double e = std::abs(lof.score(query) - oracle_lof(pts, k, query));
      lof_err = std::max(lof_err, e);
      lof_bad += !(e <= 1e-9);
      ++lof_n;
    }
  }

  for (int i = 0; i < 20; ++i) {
    const auto n = static_cast<std::size_t>(rng.between(2, 20));
    const auto pts = random_points(rng, n, 3);
    const auto forest = fit_iforest(pts, 50, n, 1000 + static_cast<std::uint64_t>(i));
    const auto queries = random_points(rng, 10, 3);
    for (const auto& tree : forest.trees())
      for (const auto& q : queries) {
        if_bad += IsolationForest::path_length(tree, q) != oracle_path(tree, 0, q, 0.0);
        ++if_n;
      }
  }

  for (int i = 0; i < 25; ++i) {
    const auto n = static_cast<std::size_t>(rng.between(3, 9));
    const auto pts = random_points(rng, n, 2);
    const double nu = std::array{0.1, 0.3, 0.5, 0.7, 1.0}[rng.below(5)];
    const double gamma = rng.uniform(0.1, 2.0);
    const OneClassSvm svm(pts, nu, gamma);
    const double gap = std::abs(svm.objective() - oracle_ocsvm_objective(pts, nu, gamma));
    svm_gap = std::max(svm_gap, gap);
    svm_bad += !(gap <= 1e-3);
    ++svm_n;
  }

  const double secs = seconds_since(t0);
  const bool pass = mp_bad + lof_bad + if_bad + svm_bad == 0 && secs < 60.0;
  return {pass, fmt("matrix profile %zu series (max error %.1e), LOF %zu queries (max error %.1e), "
                    "isolation forest %zu tree paths (%zu mismatches), OC-SVM %zu problems (max objective gap %.1e), "
                    "%.2f s (limit 60 s)",
                    mp_n, mp_err, lof_n, lof_err, if_n, if_bad, svm_n, svm_gap, secs)};
}

// ---- 4: motif recovery ----

Outcome motif_recovery() {
  int hits = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto motif = make_motif_dataset({.per_class = 30, .seed = seed});
    const auto [train, test] = train_test_split(motif.data, 0.7, seed);
    MiningConfig cfg;
    cfg.candidate_budget = 2000;
    cfg.seed = seed;
    const auto store = mine_contracted(train, cfg).store;

    // injected motif cells of every motif-class training instance
    std::set<std::pair<std::string, std::size_t>> injected;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train.label(i) != motif.motif_class) continue;
      const auto& id = train.instance(i).id;
      const auto start = motif.event_start[std::stoul(id)];
      for (std::size_t t = start; t < start + motif.width; ++t) injected.insert({id, t});
    }
    double best = 0.0;
    for (const auto sid : store.by_class_dim(motif.motif_class, motif.motif_dim)) {
      const auto& sh = store.shapelet(sid);
      std::set<std::pair<std::string, std::size_t>> covered;
      for (const auto& o : sh.occurrences)
        for (std::size_t t = o.start; t < o.start + sh.length(); ++t)
          if (injected.count({o.instance_id, t})) covered.insert({o.instance_id, t});
      best = std::max(best, static_cast<double>(covered.size()) / static_cast<double>(injected.size()));
    }
    hits += best >= 0.5;
    per_seed += fmt("%s%.2f", seed ? " " : "", best);
  }
  return {hits >= 8, fmt("%d/10 seeds recover the motif (best overlap per seed: %s; need >= 0.50 in >= 8)", hits,
                         per_seed.c_str())};
}

// ---- 5-7, 10: end-to-end on the motif dataset ----

struct EndToEnd {
  MTSDataset train, test;
  std::vector<Counterfactual> sets_cfs, baseline_cfs;
  double seconds = 0.0;
};

const EndToEnd& end_to_end() {
  static const EndToEnd run = [] {
    const auto t0 = std::chrono::steady_clock::now();
    EndToEnd e;
    const auto motif = make_motif_dataset({.per_class = 50, .seed = 2024});
    std::tie(e.train, e.test) = train_test_split(motif.data, 0.7, 0);
    MiningConfig cfg;
    cfg.candidate_budget = 2000;
    const auto store = mine_contracted(e.train, cfg).store;
    KnnClassifier model(e.train, 1);
    for (std::size_t i = 0; i < e.test.size(); ++i)
      for (const auto& target : e.train.class_set())
        if (target != e.test.label(i))
          e.sets_cfs.push_back(explain(e.test.instance(i), e.test.label(i), target, store, model, e.train));
    e.seconds = seconds_since(t0);
    for (const auto& cf : e.sets_cfs) {
      const auto& x = e.test.instance(*e.test.find(cf.base_id));
      e.baseline_cfs.push_back(baseline_dim_substitution(x, cf.original_class, cf.target_class, e.train, model));
    }
    return e;
  }();
  return run;
}

const Matrix& base_of(const EndToEnd& e, const Counterfactual& cf) {
  return e.test.instance(*e.test.find(cf.base_id)).values;
}

Outcome flip_rate() {
  const auto& e = end_to_end();
  std::size_t valid = 0, phase1 = 0, phase1_bad = 0;
  for (const auto& cf : e.sets_cfs) {
    if (!cf.valid) continue;
    ++valid;
    if (cf.phase != 1) continue;
    ++phase1;
    phase1_bad += cf.perturbed_dims().size() != 1 || sparsity(base_of(e, cf), cf.values) > 30;
  }
  const double rate = static_cast<double>(valid) / static_cast<double>(e.sets_cfs.size());
  return {rate >= 0.95 && phase1_bad == 0 && e.seconds < 120.0,
          fmt("%zu/%zu valid (%.1f%%, need >= 95%%); %zu Phase-1 results, %zu with more than one dimension or "
              "sparsity > 30; mine + explain %.2f s (limit 120 s)",
              valid, e.sets_cfs.size(), 100.0 * rate, phase1, phase1_bad, e.seconds)};
}

Outcome superiority() {
  const auto& e = end_to_end();
  std::vector<double> s_sp, b_sp, s_l1, b_l1;
  for (std::size_t i = 0; i < e.sets_cfs.size(); ++i) {
    const auto& x = base_of(e, e.sets_cfs[i]);
    s_sp.push_back(static_cast<double>(sparsity(x, e.sets_cfs[i].values)));
    b_sp.push_back(static_cast<double>(sparsity(x, e.baseline_cfs[i].values)));
    s_l1.push_back(proximity(x, e.sets_cfs[i].values).l1);
    b_l1.push_back(proximity(x, e.baseline_cfs[i].values).l1);
  }
  const double ss = oracle_median(s_sp), bs = oracle_median(b_sp), sl = oracle_median(s_l1), bl = oracle_median(b_l1);
  return {ss < bs && sl < bl,
          fmt("median sparsity %.1f vs baseline %.1f; median L1 %.2f vs baseline %.2f", ss, bs, sl, bl)};
}

Outcome plausibility_direction() {
  const auto& e = end_to_end();
  const PlausibilityDetectors detectors(e.train, DetectorConfig{});
  std::size_t lof_in = 0, if_in = 0, lof_out = 0, if_out = 0;
  for (const auto& cf : e.sets_cfs) {
    const auto r = detectors.evaluate(cf.values);
    lof_in += !r.lof_ood;
    if_in += !r.iforest_ood;
    Matrix corrupted = cf.values;
    for (auto& v : corrupted.flat()) v *= 1000.0;
    const auto c = detectors.evaluate(corrupted);
    lof_out += c.lof_ood;
    if_out += c.iforest_ood;
  }
  const double n = static_cast<double>(e.sets_cfs.size());
  const bool pass = lof_in >= 0.95 * n && if_in >= 0.95 * n && lof_out >= 0.95 * n && if_out >= 0.95 * n;
  return {pass, fmt("in-distribution: LOF %zu/%zu, IF %zu/%zu; x1000 control out-of-distribution: LOF %zu/%zu, "
                    "IF %zu/%zu (each needs >= 95%%)",
                    lof_in, e.sets_cfs.size(), if_in, e.sets_cfs.size(), lof_out, e.sets_cfs.size(), if_out,
                    e.sets_cfs.size())};
}

Outcome invariants() {
  const auto& e = end_to_end();
  std::size_t checked = 0, norm_bad = 0, local_bad = 0, budget_bad = 0;
  auto check = [&](const Counterfactual& cf, bool shapelet_budget) {
    const auto& x = base_of(e, cf);
    const auto p = proximity(x, cf.values);
    norm_bad += !(p.linf >= 0.0 && p.linf <= p.l2 * (1 + 1e-12) && p.l2 <= p.l1 * (1 + 1e-12));
    for (std::size_t d = 0; d < x.dims(); ++d)
      for (std::size_t t = 0; t < x.length(); ++t) {
        if (x(d, t) == cf.values(d, t)) continue;
        bool covered = false;
        for (const auto& r : cf.perturbations) covered = covered || (r.dim == d && r.start <= t && t < r.end);
        local_bad += !covered;
      }
    if (shapelet_budget) {
      std::size_t applied = 0;
      for (const auto& r : cf.perturbations) applied += r.end - r.start;
      budget_bad += sparsity(x, cf.values) > applied;
    }
    ++checked;
  };
  for (const auto& cf : e.sets_cfs) check(cf, true);
  for (const auto& cf : e.baseline_cfs) check(cf, false);
  return {norm_bad + local_bad + budget_bad == 0,
          fmt("%zu counterfactuals: %zu norm-ordering, %zu locality, %zu sparsity-budget violations", checked,
              norm_bad, local_bad, budget_bad)};
}

// ---- 8: dataset structure ----

Outcome dataset_structure() {
  const std::map<ClassLabel, std::size_t> expected{{"X", 303}, {"M", 350}, {"B/C", 356}, {"Q", 345}};
  TempDir dir;
  std::filesystem::path data_dir;
  std::string source;
  if (const char* env = std::getenv("SETS_SOLAR_DIR")) {
    data_dir = env;
    source = std::string("dataset at ") + env;
  } else {
    // offline stand-in with the published class counts and series length
    save_dataset(make_level_dataset(expected, 4, 60, 1.0, 8), dir / "solar", 6);
    data_dir = dir / "solar";
    source = "synthetic stand-in (set SETS_SOLAR_DIR for the real files)";
  }
  const auto ds = load_dataset(data_dir);
  std::map<ClassLabel, std::size_t> counts;
  for (const auto& l : ds.labels()) ++counts[l];
  const auto [train, test] = train_test_split(ds, 0.7, 0);
  const auto tasks = explain_tasks(test, train.class_set());
  std::vector<std::size_t> per_instance(test.size(), 0);
  bool targets_ok = true;
  for (const auto& t : tasks) {
    ++per_instance[t.test_index];
    targets_ok = targets_ok && t.target != test.label(t.test_index);
  }
  for (auto c : per_instance) targets_ok = targets_ok && c == 3;
  const bool pass = counts == expected && ds.size() == 1354 && ds.length() == 60 && train.size() == 947 &&
                    test.size() == 407 && tasks.size() == 1221 && targets_ok;
  return {pass, fmt("%s: X %zu, M %zu, B/C %zu, Q %zu, total %zu, T=%zu, D=%zu; split %zu/%zu; %zu attempts, "
                    "3 distinct targets per test instance: %s",
                    source.c_str(), counts["X"], counts["M"], counts["B/C"], counts["Q"], ds.size(), ds.length(),
                    ds.dims(), train.size(), test.size(), tasks.size(), targets_ok ? "yes" : "no")};
}

// ---- 9: determinism through the command-line tool ----

int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(SETS_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  TempDir dir;
  if (run_cli("synth " + (dir / "data").string() + " --per-class 30 --seed 5", dir / "synth.log") != 0)
    return {false, "synth failed: " + read_file(dir / "synth.log")};
  write_file(dir / "run.conf", "[dataset]\npath = data\n[mining]\ncandidates = 1000\n");
  const auto conf = (dir / "run.conf").string();
  for (const auto& [out, jobs] : std::vector<std::pair<std::string, int>>{{"one", 1}, {"four", 4}}) {
    const int rc = run_cli("run -c " + conf + " --seed 7 -j " + std::to_string(jobs) + " --out " + (dir / out).string(),
                           dir / (out + ".log"));
    if (rc != 0) return {false, fmt("run --jobs %d exited %d", jobs, rc)};
  }
  std::vector<std::string> runs;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "one")) runs.push_back(entry.path().filename());
  if (runs.size() != 1) return {false, "expected exactly one run directory"};
  std::string detail;
  bool same = true;
  for (const char* f : {"shapelets.json", "counterfactuals.json", "report.json"}) {
    const auto a = read_file(dir / "one" / runs[0] / f), b = read_file(dir / "four" / runs[0] / f);
    const bool eq = !a.empty() && a == b;
    same = same && eq;
    detail += fmt("%s%s %s (%zu bytes)", detail.empty() ? "" : ", ", f, eq ? "identical" : "DIFFERENT", a.size());
  }
  return {same, "--jobs 1 vs --jobs 4: " + detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"sdist oracle equivalence", sdist_oracle},
      {"information gain oracle equivalence", gain_oracle},
      {"matrix profile / LOF / isolation forest / OC-SVM oracles", detector_oracles},
      {"motif recovery", motif_recovery},
      {"end-to-end flip rate", flip_rate},
      {"sparsity and proximity against the baseline", superiority},
      {"plausibility direction", plausibility_direction},
      {"dataset structure and target protocol", dataset_structure},
      {"determinism across --jobs", determinism},
      {"norm-ordering and locality invariants", invariants},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed ? 1 : 0;
}
