#pragma once

// The black-box classifier boundary. Explanation code only ever sees
// `Classifier::predict`; it never inspects model internals.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sets/dataset.hpp"
#include "sets/error.hpp"
#include "sets/matrix.hpp"
#include "sets/subprocess.hpp"

#include <json.hpp>

namespace sets {

/// Class scores, kept sorted by class label.
class PredictionVector {
 public:
  PredictionVector() = default;
  explicit PredictionVector(std::map<ClassLabel, double> scores) {
    entries_.assign(scores.begin(), scores.end());
    for (const auto& [c, s] : entries_)
      if (!std::isfinite(s)) throw ContractError("PredictionVector: non-finite score for class " + c);
  }

  const std::vector<std::pair<ClassLabel, double>>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  double score(const ClassLabel& c) const {
    for (const auto& [k, s] : entries_)
      if (k == c) return s;
    return 0.0;
  }

  /// Highest score; ties go to the lexicographically smallest class.
  const ClassLabel& argmax() const {
    if (entries_.empty()) throw ContractError("PredictionVector: empty");
    auto best = entries_.begin();
    for (auto it = entries_.begin(); it != entries_.end(); ++it)
      if (it->second > best->second) best = it;
    return best->first;
  }

  friend bool operator==(const PredictionVector&, const PredictionVector&) = default;

 private:
  std::vector<std::pair<ClassLabel, double>> entries_;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual PredictionVector predict(const Matrix& instance) = 0;
  /// Whether predict may be called from several threads on one object.
  virtual bool concurrent_safe() const noexcept = 0;
};

/// k-nearest-neighbour vote over the flattened D x T representation.
class KnnClassifier final : public Classifier {
 public:
  KnnClassifier(MTSDataset train, std::size_t k) : train_(std::move(train)), k_(k), classes_(train_.class_set()) {
    if (train_.empty()) throw ContractError("fit_builtin_knn: empty training set");
    if (k_ < 1 || k_ > train_.size()) throw ContractError("fit_builtin_knn: k must lie in [1, N_train]");
  }

  PredictionVector predict(const Matrix& instance) override {
    if (instance.dims() != train_.dims() || instance.length() != train_.length())
      throw ContractError("predict: instance shape does not match the model's training shape");
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(train_.size());
    for (std::size_t i = 0; i < train_.size(); ++i) {
      const auto a = instance.flat();
      const auto b = train_.instance(i).values.flat();
      double s = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
      dist.emplace_back(s, i);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    std::map<ClassLabel, double> scores;
    for (const auto& c : classes_) scores[c] = 0.0;
    for (std::size_t i = 0; i < k_; ++i) scores[train_.label(dist[i].second)] += 1.0 / static_cast<double>(k_);
    return PredictionVector(std::move(scores));
  }

  bool concurrent_safe() const noexcept override { return true; }
  std::size_t k() const noexcept { return k_; }

 private:
  MTSDataset train_;
  std::size_t k_;
  std::vector<ClassLabel> classes_;
};

/// Encodes one request line of the child-process protocol (no trailing LF).
inline std::string encode_predict_request(const std::string& id, const Matrix& m) {
  nlohmann::json values = nlohmann::json::array();
  for (std::size_t d = 0; d < m.dims(); ++d) {
    const auto row = m.row(d);
    values.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return nlohmann::json{{"id", id}, {"values", std::move(values)}}.dump();
}

/// Decodes a request line back into (id, matrix). Used by model stubs.
inline std::pair<std::string, Matrix> decode_predict_request(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  const auto& rows = j.at("values");
  const std::size_t d = rows.size();
  const std::size_t t = d == 0 ? 0 : rows.at(0).size();
  Matrix m(d, t);
  for (std::size_t i = 0; i < d; ++i) {
    if (rows[i].size() != t) throw ContractError("decode_predict_request: ragged values");
    for (std::size_t k = 0; k < t; ++k) m(i, k) = rows[i][k].get<double>();
  }
  return {j.at("id").get<std::string>(), std::move(m)};
}

/// Talks line-delimited JSON to a long-lived child process. Not concurrent-safe;
/// each worker needs its own instance.
class ExternalProcessClassifier final : public Classifier {
 public:
  ExternalProcessClassifier(std::vector<std::string> argv, std::vector<ClassLabel> classes,
                            std::chrono::milliseconds timeout)
      : argv_(std::move(argv)), classes_(std::move(classes)), timeout_(timeout) {
    std::sort(classes_.begin(), classes_.end());
  }

  PredictionVector predict(const Matrix& instance) override {
    if (!proc_) proc_ = std::make_unique<ChildProcess>(argv_);
    const std::string id = std::to_string(next_id_++);
    std::string line;
    try {
      proc_->write_line(encode_predict_request(id, instance));
      line = proc_->read_line(timeout_);
    } catch (const ModelUnavailable&) {
      proc_.reset();
      throw;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ModelUnavailable(ModelUnavailable::Code::MalformedResponse,
                             std::string("external model: unparseable response: ") + e.what());
    }
    if (!j.is_object() || !j.contains("scores") || !j["scores"].is_object())
      throw ModelUnavailable(ModelUnavailable::Code::MalformedResponse, "external model: response lacks 'scores'");
    if (j.contains("id") && j["id"] != id)
      throw ModelUnavailable(ModelUnavailable::Code::MalformedResponse, "external model: response id mismatch");
    std::map<ClassLabel, double> scores;
    for (const auto& [k, v] : j["scores"].items()) {
      if (!v.is_number())
        throw ModelUnavailable(ModelUnavailable::Code::MalformedResponse, "external model: non-numeric score");
      if (!classes_.empty() && !std::binary_search(classes_.begin(), classes_.end(), k))
        throw ModelUnavailable(ModelUnavailable::Code::MalformedResponse, "external model: unknown class " + k);
      scores[k] = v.get<double>();
    }
    if (scores.empty())
      throw ModelUnavailable(ModelUnavailable::Code::MalformedResponse, "external model: empty scores");
    for (const auto& c : classes_)
      if (!scores.contains(c))
        throw ModelUnavailable(ModelUnavailable::Code::MalformedResponse, "external model: missing class " + c);
    try {
      return PredictionVector(std::move(scores));
    } catch (const ContractError& e) {
      throw ModelUnavailable(ModelUnavailable::Code::MalformedResponse, e.what());
    }
  }

  bool concurrent_safe() const noexcept override { return false; }

 private:
  std::vector<std::string> argv_;
  std::vector<ClassLabel> classes_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<ChildProcess> proc_;
  std::uint64_t next_id_ = 0;
};

/// Declarative description of which classifier to use.
struct ModelBinding {
  enum class Kind { BuiltinKnn, ExternalProcess };
  Kind kind = Kind::BuiltinKnn;
  std::size_t k = 1;
  std::vector<std::string> command;  // executable followed by its arguments
  std::chrono::milliseconds timeout{30000};
};

inline ModelBinding fit_builtin_knn_binding(std::size_t k) {
  ModelBinding b;
  b.k = k;
  return b;
}

inline std::unique_ptr<KnnClassifier> fit_builtin_knn(const MTSDataset& train, std::size_t k) {
  return std::make_unique<KnnClassifier>(train, k);
}

inline std::unique_ptr<Classifier> make_classifier(const ModelBinding& binding, const MTSDataset& train) {
  switch (binding.kind) {
    case ModelBinding::Kind::BuiltinKnn:
      return fit_builtin_knn(train, binding.k);
    case ModelBinding::Kind::ExternalProcess:
      if (binding.command.empty()) throw ConfigError("external-process model binding needs a command");
      return std::make_unique<ExternalProcessClassifier>(binding.command, train.class_set(), binding.timeout);
  }
  throw ConfigError("unknown model kind");
}

}  // namespace sets
