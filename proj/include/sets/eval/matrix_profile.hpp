#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "sets/dataset.hpp"
#include "sets/error.hpp"
#include "sets/matrix.hpp"

namespace sets {

/// Self-join matrix profile by exhaustive scan: for every window start i the
/// smallest z-normalized Euclidean distance to a window j with 2|i - j| >= m.
inline std::vector<double> matrix_profile(std::span<const double> series, std::size_t m) {
  if (m < 2 || 2 * m > series.size()) throw ContractError("matrix_profile: need 2 <= m <= len(series) / 2");
  const std::size_t count = series.size() - m + 1;
  std::vector<std::vector<double>> windows;
  windows.reserve(count);
  for (std::size_t i = 0; i < count; ++i) windows.push_back(znormalize(series.subspan(i, m)));

  std::vector<double> profile(count, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      if (2 * (j - i) < m) continue;
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double d = windows[i][k] - windows[j][k];
        s += d * d;
      }
      const double dist = std::sqrt(s);
      profile[i] = std::min(profile[i], dist);
      profile[j] = std::min(profile[j], dist);
    }
  }
  return profile;
}

/// Per-dimension profiles concatenated in dimension order.
inline std::vector<double> matrix_profile_features(const Matrix& x, std::size_t m) {
  std::vector<double> out;
  for (std::size_t d = 0; d < x.dims(); ++d) {
    const auto p = matrix_profile(x.row(d), m);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace sets
