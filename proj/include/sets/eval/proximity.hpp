#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "sets/matrix.hpp"

namespace sets {

struct ProximityResult {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

/// L1, L2 and L-infinity norms of the cell-wise difference. L-infinity is the
/// single largest absolute cell change.
inline ProximityResult proximity(const Matrix& x, const Matrix& x_cf) {
  require_same_shape(x, x_cf, "proximity");
  ProximityResult r;
  double sq = 0.0;
  const auto a = x.flat();
  const auto b = x_cf.flat();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    r.l1 += d;
    sq += d * d;
    r.linf = std::max(r.linf, d);
  }
  r.l2 = std::sqrt(sq);
  return r;
}

/// Number of cells whose absolute change exceeds tol.
inline std::size_t sparsity(const Matrix& x, const Matrix& x_cf, double tol = 0.0) {
  require_same_shape(x, x_cf, "sparsity");
  if (tol < 0.0) throw ContractError("sparsity: tol must be >= 0");
  std::size_t n = 0;
  const auto a = x.flat();
  const auto b = x_cf.flat();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) ++n;
  return n;
}

}  // namespace sets
