#pragma once

// Labeled multivariate time-series datasets: CSV ingestion, stratified
// splitting and the two per-segment scalings used throughout the library.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sets/error.hpp"
#include "sets/matrix.hpp"
#include "sets/random.hpp"

namespace sets {

using ClassLabel = std::string;

struct MTSInstance {
  Matrix values;
  std::string id;
};

/// Min/max of one dimension of one instance.
struct DimensionRange {
  std::size_t dim = 0;
  double min = 0.0;
  double max = 0.0;
};

inline DimensionRange dimension_range(const Matrix& m, std::size_t dim) {
  const auto row = m.row(dim);
  const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
  return {dim, *lo, *hi};
}

class MTSDataset {
 public:
  MTSDataset() = default;
  MTSDataset(std::vector<MTSInstance> instances, std::vector<ClassLabel> labels)
      : instances_(std::move(instances)), labels_(std::move(labels)) {
    validate();
  }

  std::size_t size() const noexcept { return instances_.size(); }
  bool empty() const noexcept { return instances_.empty(); }
  std::size_t dims() const noexcept { return instances_.empty() ? 0 : instances_.front().values.dims(); }
  std::size_t length() const noexcept { return instances_.empty() ? 0 : instances_.front().values.length(); }

  const MTSInstance& instance(std::size_t i) const { return instances_.at(i); }
  const ClassLabel& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<MTSInstance>& instances() const noexcept { return instances_; }
  const std::vector<ClassLabel>& labels() const noexcept { return labels_; }

  /// Distinct labels in lexicographic order.
  std::vector<ClassLabel> class_set() const {
    std::vector<ClassLabel> out(labels_);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::map<ClassLabel, std::size_t> class_counts() const {
    std::map<ClassLabel, std::size_t> counts;
    for (const auto& l : labels_) ++counts[l];
    return counts;
  }

  std::optional<std::size_t> find(std::string_view id) const {
    for (std::size_t i = 0; i < instances_.size(); ++i)
      if (instances_[i].id == id) return i;
    return std::nullopt;
  }

  MTSDataset subset(std::span<const std::size_t> indices) const {
    std::vector<MTSInstance> inst;
    std::vector<ClassLabel> lab;
    inst.reserve(indices.size());
    lab.reserve(indices.size());
    for (auto i : indices) {
      inst.push_back(instances_.at(i));
      lab.push_back(labels_.at(i));
    }
    MTSDataset out;
    out.instances_ = std::move(inst);
    out.labels_ = std::move(lab);
    return out;
  }

 private:
  void validate() const {
    if (instances_.size() != labels_.size())
      throw ContractError("MTSDataset: instance/label count mismatch");
    if (instances_.size() < 2) throw ContractError("MTSDataset: need at least 2 instances");
    const auto d = instances_.front().values.dims();
    const auto t = instances_.front().values.length();
    if (d == 0 || t < 2) throw ContractError("MTSDataset: need D >= 1 and T >= 2");
    for (const auto& in : instances_) {
      if (in.values.dims() != d || in.values.length() != t)
        throw ContractError("MTSDataset: instance " + in.id + " has a different shape");
      for (double v : in.values.flat())
        if (!std::isfinite(v)) throw ContractError("MTSDataset: instance " + in.id + " has a non-finite value");
    }
  }

  std::vector<MTSInstance> instances_;
  std::vector<ClassLabel> labels_;
};

struct DatasetSchema {
  /// Number of dim_<k>.csv files; detected from the directory when unset.
  std::optional<std::size_t> dimensions;
  std::string labels_file = "labels.csv";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw LoadError(LoadError::Kind::MissingFile, p.string(), -1, "cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

inline std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& p) {
  const auto lines = read_lines(p);
  std::vector<std::vector<double>> rows;
  rows.reserve(lines.size());
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::vector<double> row;
    std::string_view rest = lines[r];
    while (true) {
      const auto comma = rest.find(',');
      const auto cell = trim(rest.substr(0, comma));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size())
        throw LoadError(LoadError::Kind::NonNumeric, p.string(), static_cast<std::ptrdiff_t>(r),
                        "non-numeric cell '" + std::string(cell) + "'");
      if (!std::isfinite(v))
        throw LoadError(LoadError::Kind::NonFinite, p.string(), static_cast<std::ptrdiff_t>(r), "non-finite value");
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw LoadError(LoadError::Kind::RaggedRow, p.string(), static_cast<std::ptrdiff_t>(r),
                      "row has " + std::to_string(row.size()) + " columns, expected " +
                          std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string format_number(double v, int precision) {
  char buf[64];
  const auto res = precision < 0 ? std::to_chars(buf, buf + sizeof buf, v)
                                 : std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return {buf, res.ptr};
}

}  // namespace detail

/// Reads dim_<k>.csv (rows = instances, columns = time steps) and labels.csv.
/// Instance ids are the 0-based row numbers.
inline MTSDataset load_dataset(const std::filesystem::path& data_dir, const DatasetSchema& schema = {}) {
  namespace fs = std::filesystem;
  std::size_t dims = 0;
  if (schema.dimensions) {
    dims = *schema.dimensions;
  } else {
    while (fs::exists(data_dir / ("dim_" + std::to_string(dims) + ".csv"))) ++dims;
  }
  if (dims == 0)
    throw LoadError(LoadError::Kind::MissingFile, (data_dir / "dim_0.csv").string(), -1, "missing dimension file");

  std::vector<std::vector<std::vector<double>>> per_dim;
  per_dim.reserve(dims);
  for (std::size_t k = 0; k < dims; ++k) {
    const auto p = data_dir / ("dim_" + std::to_string(k) + ".csv");
    if (!fs::exists(p)) throw LoadError(LoadError::Kind::MissingFile, p.string(), -1, "missing dimension file");
    per_dim.push_back(detail::read_numeric_csv(p));
  }

  const auto labels_path = data_dir / schema.labels_file;
  const auto label_lines = detail::read_lines(labels_path);
  std::vector<ClassLabel> labels;
  labels.reserve(label_lines.size());
  for (std::size_t r = 0; r < label_lines.size(); ++r) {
    const auto tok = detail::trim(label_lines[r]);
    if (tok.empty())
      throw LoadError(LoadError::Kind::LabelCountMismatch, labels_path.string(), static_cast<std::ptrdiff_t>(r),
                      "empty label");
    labels.emplace_back(tok);
  }

  const auto n = per_dim.front().size();
  const auto t = n == 0 ? 0 : per_dim.front().front().size();
  for (std::size_t k = 0; k < dims; ++k) {
    const auto name = (data_dir / ("dim_" + std::to_string(k) + ".csv")).string();
    if (per_dim[k].size() != n)
      throw LoadError(LoadError::Kind::Shape, name, -1,
                      "has " + std::to_string(per_dim[k].size()) + " rows, dim_0.csv has " + std::to_string(n));
    if (n > 0 && per_dim[k].front().size() != t)
      throw LoadError(LoadError::Kind::RaggedRow, name, 0, "row length differs from dim_0.csv");
  }
  if (labels.size() != n)
    throw LoadError(LoadError::Kind::LabelCountMismatch, labels_path.string(), -1,
                    std::to_string(labels.size()) + " labels for " + std::to_string(n) + " instances");
  if (n < 2) throw LoadError(LoadError::Kind::Shape, data_dir.string(), -1, "need at least 2 instances");
  if (t < 2) throw LoadError(LoadError::Kind::Shape, data_dir.string(), -1, "need at least 2 time steps");

  std::vector<MTSInstance> instances;
  instances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Matrix m(dims, t);
    for (std::size_t k = 0; k < dims; ++k) std::copy(per_dim[k][i].begin(), per_dim[k][i].end(), m.row(k).begin());
    instances.push_back({std::move(m), std::to_string(i)});
  }
  return MTSDataset(std::move(instances), std::move(labels));
}

/// Writes the dataset in the load_dataset layout. precision < 0 writes the
/// shortest representation that round-trips exactly; otherwise fixed notation
/// with that many fractional digits.
inline void save_dataset(const MTSDataset& ds, const std::filesystem::path& dir, int precision = -1) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < ds.dims(); ++k) {
    std::ofstream out(dir / ("dim_" + std::to_string(k) + ".csv"), std::ios::binary);
    for (const auto& inst : ds.instances()) {
      const auto row = inst.values.row(k);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out << ',';
        out << detail::format_number(row[j], precision);
      }
      out << '\n';
    }
  }
  std::ofstream lab(dir / "labels.csv", std::ios::binary);
  for (const auto& l : ds.labels()) lab << l << '\n';
}

/// Stratified split. Per class, floor(fraction * N_c) instances go to train;
/// the train total is N - ceil((1 - fraction) * N) and the leftover slots go
/// to the classes with the largest fractional parts (ties: class order).
/// Both partitions keep the original instance order.
inline std::pair<MTSDataset, MTSDataset> train_test_split(const MTSDataset& ds, double train_fraction,
                                                          std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ContractError("train_test_split: fraction must lie in (0, 1)");
  constexpr double eps = 1e-9;
  const auto classes = ds.class_set();
  std::vector<std::vector<std::size_t>> members(classes.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = std::lower_bound(classes.begin(), classes.end(), ds.label(i)) - classes.begin();
    members[static_cast<std::size_t>(c)].push_back(i);
  }
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (members[c].size() < 2)
      throw StratificationError("train_test_split: class '" + classes[c] + "' has fewer than 2 members");

  const auto n = static_cast<double>(ds.size());
  const auto total_train =
      static_cast<std::int64_t>(ds.size()) - static_cast<std::int64_t>(std::ceil((1.0 - train_fraction) * n - eps));
  std::vector<std::size_t> take(classes.size());
  std::vector<double> frac(classes.size());
  std::int64_t assigned = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double exact = train_fraction * static_cast<double>(members[c].size());
    take[c] = static_cast<std::size_t>(std::floor(exact + eps));
    frac[c] = exact - static_cast<double>(take[c]);
    assigned += static_cast<std::int64_t>(take[c]);
  }
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return frac[a] > frac[b]; });
  for (std::int64_t extra = total_train - assigned, i = 0; extra > 0 && i < static_cast<std::int64_t>(order.size());
       --extra, ++i) {
    auto c = order[static_cast<std::size_t>(i)];
    if (take[c] < members[c].size()) ++take[c];
  }

  Rng rng(seed);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto& m = members[c];
    rng.shuffle(std::span<std::size_t>(m));
    train_idx.insert(train_idx.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(take[c]));
    test_idx.insert(test_idx.end(), m.begin() + static_cast<std::ptrdiff_t>(take[c]), m.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

/// Affine map of a segment onto [target.min, target.max]. Constant segments
/// map to the target midpoint.
inline std::vector<double> minmax_rescale(std::span<const double> segment, const DimensionRange& target) {
  if (segment.empty()) throw ContractError("minmax_rescale: empty segment");
  const auto [lo_it, hi_it] = std::minmax_element(segment.begin(), segment.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(segment.size());
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.5 * (target.min + target.max));
    return out;
  }
  const double scale = (target.max - target.min) / (hi - lo);
  for (std::size_t i = 0; i < segment.size(); ++i) out[i] = target.min + (segment[i] - lo) * scale;
  // pin the extremes so the output range is exact
  out[static_cast<std::size_t>(lo_it - segment.begin())] = target.min;
  out[static_cast<std::size_t>(hi_it - segment.begin())] = target.max;
  return out;
}

/// Zero mean, unit population standard deviation; constant segments map to zeros.
inline std::vector<double> znormalize(std::span<const double> segment) {
  if (segment.empty()) throw ContractError("znormalize: empty segment");
  const double n = static_cast<double>(segment.size());
  double mean = 0.0;
  for (double v : segment) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : segment) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(segment.size(), 0.0);
  if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) return out;
  for (std::size_t i = 0; i < segment.size(); ++i) out[i] = (segment[i] - mean) / sd;
  return out;
}

}  // namespace sets
