#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sets {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or shape violation at an API boundary.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset ingestion failure. Carries the offending file and (0-based) row.
class LoadError : public Error {
 public:
  enum class Kind { MissingFile, RaggedRow, NonNumeric, NonFinite, LabelCountMismatch, Shape };

  LoadError(Kind kind, std::string file, std::ptrdiff_t row, const std::string& what)
      : Error(file + (row >= 0 ? ":" + std::to_string(row) : std::string{}) + ": " + what),
        kind_(kind),
        file_(std::move(file)),
        row_(row) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& file() const noexcept { return file_; }
  /// -1 when the error is not tied to a row.
  std::ptrdiff_t row() const noexcept { return row_; }

 private:
  Kind kind_;
  std::string file_;
  std::ptrdiff_t row_;
};

class StratificationError : public Error {
 public:
  using Error::Error;
};

/// Mining produced no class-shapelets, or an engine was handed an empty store.
class EmptyStoreError : public Error {
 public:
  using Error::Error;
};

/// The black-box model could not produce a prediction.
class ModelUnavailable : public Error {
 public:
  enum class Code { SpawnFailed = 1, Crashed = 2, Timeout = 3, MalformedResponse = 4 };

  ModelUnavailable(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace sets
