#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sets/error.hpp"

namespace sets {

/// Dense D x T matrix stored row-major (dimension-then-time).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t dims, std::size_t length, double fill = 0.0)
      : dims_(dims), length_(length), data_(dims * length, fill) {}
  Matrix(std::size_t dims, std::size_t length, std::vector<double> data)
      : dims_(dims), length_(length), data_(std::move(data)) {
    if (data_.size() != dims_ * length_) throw ContractError("Matrix: data size does not match shape");
  }

  std::size_t dims() const noexcept { return dims_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t d, std::size_t t) noexcept { return data_[d * length_ + t]; }
  double operator()(std::size_t d, std::size_t t) const noexcept { return data_[d * length_ + t]; }

  std::span<double> row(std::size_t d) noexcept { return {data_.data() + d * length_, length_}; }
  std::span<const double> row(std::size_t d) const noexcept { return {data_.data() + d * length_, length_}; }

  /// Row-major flattened view, the representation fed to the outlier detectors.
  std::span<const double> flat() const noexcept { return data_; }
  std::span<double> flat() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Matrix& o) const noexcept { return dims_ == o.dims_ && length_ == o.length_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t dims_ = 0;
  std::size_t length_ = 0;
  std::vector<double> data_;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
  if (!a.same_shape(b)) throw ContractError(std::string(where) + ": shape mismatch");
}

}  // namespace sets
