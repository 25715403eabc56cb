#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sets/dataset.hpp"
#include "sets/error.hpp"
#include "sets/eval/plausibility.hpp"
#include "sets/eval/proximity.hpp"

#include <json.hpp>

namespace sets {

struct EvaluationRow {
  std::string method;
  std::string base_id;
  ClassLabel original_class;
  ClassLabel target_class;
  bool valid = false;
  ProximityResult proximity;
  std::size_t sparsity = 0;
  std::size_t perturbed_dims = 0;
  PlausibilityResult plausibility;
};

struct Summary {
  double mean = 0.0;
  double median = 0.0;
};

struct MethodAggregates {
  std::size_t rows = 0;
  std::size_t valid = 0;
  Summary l1, l2, linf, sparsity, perturbed_dims;
  double lof_ood_pct = 0.0;
  double iforest_ood_pct = 0.0;
  double ocsvm_raw_ood_pct = 0.0;
  double ocsvm_mp_ood_pct = 0.0;
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;
  /// Keyed by method name.
  std::map<std::string, MethodAggregates> aggregates;
  /// Same, after dropping rows that every detector flags out-of-distribution.
  std::map<std::string, MethodAggregates> aggregates_without_outliers;
};

inline Summary summarize(std::vector<double> v) {
  if (v.empty()) return {};
  double sum = 0.0;
  for (double x : v) sum += x;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return {sum / static_cast<double>(n), median};
}

inline MethodAggregates aggregate(const std::vector<const EvaluationRow*>& rows) {
  MethodAggregates a;
  a.rows = rows.size();
  std::vector<double> l1, l2, linf, sp, dims;
  std::size_t lof = 0, ifo = 0, raw = 0, mp = 0;
  for (const auto* r : rows) {
    a.valid += r->valid;
    l1.push_back(r->proximity.l1);
    l2.push_back(r->proximity.l2);
    linf.push_back(r->proximity.linf);
    sp.push_back(static_cast<double>(r->sparsity));
    dims.push_back(static_cast<double>(r->perturbed_dims));
    lof += r->plausibility.lof_ood;
    ifo += r->plausibility.iforest_ood;
    raw += r->plausibility.ocsvm_raw_ood;
    mp += r->plausibility.ocsvm_mp_ood;
  }
  a.l1 = summarize(l1);
  a.l2 = summarize(l2);
  a.linf = summarize(linf);
  a.sparsity = summarize(sp);
  a.perturbed_dims = summarize(dims);
  const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
  a.lof_ood_pct = 100.0 * static_cast<double>(lof) / n;
  a.iforest_ood_pct = 100.0 * static_cast<double>(ifo) / n;
  a.ocsvm_raw_ood_pct = 100.0 * static_cast<double>(raw) / n;
  a.ocsvm_mp_ood_pct = 100.0 * static_cast<double>(mp) / n;
  return a;
}

inline EvaluationReport build_report(std::vector<EvaluationRow> rows) {
  if (rows.empty()) throw ContractError("build_report: no rows");
  EvaluationReport rep;
  rep.rows = std::move(rows);
  std::map<std::string, std::vector<const EvaluationRow*>> all, kept;
  for (const auto& r : rep.rows) {
    all[r.method].push_back(&r);
    if (r.plausibility.ood_count() < 4) kept[r.method].push_back(&r);
  }
  for (const auto& [m, rs] : all) {
    rep.aggregates[m] = aggregate(rs);
    rep.aggregates_without_outliers[m] = aggregate(kept[m]);
  }
  return rep;
}

inline nlohmann::json to_json(const Summary& s) { return {{"mean", s.mean}, {"median", s.median}}; }

inline nlohmann::json to_json(const MethodAggregates& a) {
  return {{"rows", a.rows},
          {"valid", a.valid},
          {"l1", to_json(a.l1)},
          {"l2", to_json(a.l2)},
          {"linf", to_json(a.linf)},
          {"sparsity", to_json(a.sparsity)},
          {"perturbed_dims", to_json(a.perturbed_dims)},
          {"ood_pct",
           {{"lof", a.lof_ood_pct},
            {"iforest", a.iforest_ood_pct},
            {"ocsvm_raw", a.ocsvm_raw_ood_pct},
            {"ocsvm_mp", a.ocsvm_mp_ood_pct}}}};
}

inline nlohmann::json to_json(const EvaluationRow& r) {
  const auto& p = r.plausibility;
  return {{"method", r.method},
          {"base_id", r.base_id},
          {"original_class", r.original_class},
          {"target_class", r.target_class},
          {"valid", r.valid},
          {"l1", r.proximity.l1},
          {"l2", r.proximity.l2},
          {"linf", r.proximity.linf},
          {"sparsity", r.sparsity},
          {"perturbed_dims", r.perturbed_dims},
          {"lof", p.lof},
          {"iforest", p.iforest},
          {"ocsvm_raw", p.ocsvm_raw},
          {"ocsvm_mp", p.ocsvm_mp},
          {"lof_ood", p.lof_ood},
          {"iforest_ood", p.iforest_ood},
          {"ocsvm_raw_ood", p.ocsvm_raw_ood},
          {"ocsvm_mp_ood", p.ocsvm_mp_ood}};
}

inline nlohmann::json to_json(const EvaluationReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) rows.push_back(to_json(r));
  nlohmann::json agg = nlohmann::json::object(), agg_wo = nlohmann::json::object();
  for (const auto& [m, a] : rep.aggregates) agg[m] = to_json(a);
  for (const auto& [m, a] : rep.aggregates_without_outliers) agg_wo[m] = to_json(a);
  return {{"format_version", 1}, {"aggregates", agg}, {"aggregates_without_outliers", agg_wo}, {"rows", rows}};
}

namespace detail {
inline std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}
}  // namespace detail

/// One row per counterfactual; doubles in shortest round-trip form.
inline void write_report_csv(const EvaluationReport& rep, std::ostream& out) {
  out << "method,base_id,original_class,target_class,valid,l1,l2,linf,sparsity,perturbed_dims,"
         "lof,iforest,ocsvm_raw,ocsvm_mp,lof_ood,iforest_ood,ocsvm_raw_ood,ocsvm_mp_ood\n";
  for (const auto& r : rep.rows) {
    const auto& p = r.plausibility;
    out << r.method << ',' << r.base_id << ',' << r.original_class << ',' << r.target_class << ',' << int(r.valid)
        << ',' << detail::fmt_double(r.proximity.l1) << ',' << detail::fmt_double(r.proximity.l2) << ','
        << detail::fmt_double(r.proximity.linf) << ',' << r.sparsity << ',' << r.perturbed_dims << ','
        << detail::fmt_double(p.lof) << ',' << detail::fmt_double(p.iforest) << ',' << detail::fmt_double(p.ocsvm_raw)
        << ',' << detail::fmt_double(p.ocsvm_mp) << ',' << int(p.lof_ood) << ',' << int(p.iforest_ood) << ','
        << int(p.ocsvm_raw_ood) << ',' << int(p.ocsvm_mp_ood) << '\n';
  }
}

/// Aligned proximity, sparsity and plausibility tables, one column per method.
inline void print_report_tables(const EvaluationReport& rep, std::ostream& out) {
  auto line = [&](const char* label, auto get) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-22s", label);
    out << buf;
    for (const auto& [m, a] : rep.aggregates) {
      std::snprintf(buf, sizeof buf, "%14.3f", get(a));
      out << buf;
    }
    out << '\n';
  };
  auto header = [&](const char* title) {
    char buf[64];
    out << '\n' << title << '\n';
    std::snprintf(buf, sizeof buf, "%-22s", "");
    out << buf;
    for (const auto& [m, a] : rep.aggregates) {
      std::snprintf(buf, sizeof buf, "%14s", m.c_str());
      out << buf;
    }
    out << '\n';
  };
  header("Proximity");
  line("L1 mean", [](const MethodAggregates& a) { return a.l1.mean; });
  line("L1 median", [](const MethodAggregates& a) { return a.l1.median; });
  line("L2 mean", [](const MethodAggregates& a) { return a.l2.mean; });
  line("L2 median", [](const MethodAggregates& a) { return a.l2.median; });
  line("Linf mean", [](const MethodAggregates& a) { return a.linf.mean; });
  line("Linf median", [](const MethodAggregates& a) { return a.linf.median; });
  header("Sparsity (perturbed time steps)");
  line("mean", [](const MethodAggregates& a) { return a.sparsity.mean; });
  line("median", [](const MethodAggregates& a) { return a.sparsity.median; });
  line("perturbed dims mean", [](const MethodAggregates& a) { return a.perturbed_dims.mean; });
  header("Plausibility (% out-of-distribution)");
  line("LOF", [](const MethodAggregates& a) { return a.lof_ood_pct; });
  line("IF", [](const MethodAggregates& a) { return a.iforest_ood_pct; });
  line("OC-SVM", [](const MethodAggregates& a) { return a.ocsvm_raw_ood_pct; });
  line("OC-SVM MP", [](const MethodAggregates& a) { return a.ocsvm_mp_ood_pct; });
  header("Validity");
  line("rows", [](const MethodAggregates& a) { return static_cast<double>(a.rows); });
  line("valid %", [](const MethodAggregates& a) {
    return a.rows ? 100.0 * static_cast<double>(a.valid) / static_cast<double>(a.rows) : 0.0;
  });
}

}  // namespace sets
