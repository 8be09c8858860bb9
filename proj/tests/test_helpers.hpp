#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gpemu/core.hpp"
#include "gpemu/detail/rng.hpp"
#include "gpemu/matrix.hpp"

namespace test_helpers {

inline double rel_diff(double a, double b) {
  const double denom = std::max(std::abs(a), std::abs(b));
  return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
}

/// Random design on the unit cube with a minimum pairwise separation, so the
/// correlation matrix stays comfortably positive definite (jitter-free) for
/// oracle comparisons.
inline gpemu::Matrix<double> random_separated_design(std::size_t n, std::size_t d,
                                                     gpemu::detail::Rng& rng,
                                                     double min_dist = 0.08) {
  gpemu::Matrix<double> x(n, d);
  std::size_t placed = 0;
  while (placed < n) {
    std::vector<double> candidate(d);
    for (std::size_t k = 0; k < d; ++k) candidate[k] = rng.uniform01();
    bool ok = true;
    for (std::size_t i = 0; i < placed && ok; ++i) {
      double dist2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = candidate[k] - x(i, k);
        dist2 += diff * diff;
      }
      ok = dist2 > min_dist * min_dist;
    }
    if (!ok) continue;
    for (std::size_t k = 0; k < d; ++k) x(placed, k) = candidate[k];
    ++placed;
  }
  return x;
}

/// Smooth deterministic response surface for synthetic fits.
inline double smooth_response(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    s += std::sin(3.0 * x[k] + 0.37 * static_cast<double>(k)) + 0.5 * x[k] * x[k];
  }
  return s;
}

inline std::vector<double> smooth_outputs(const gpemu::Matrix<double>& x) {
  std::vector<double> y(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) y[i] = smooth_response(x.row(i));
  return y;
}

inline gpemu::Dataset random_dataset(std::size_t n, std::size_t d, gpemu::detail::Rng& rng,
                                     double min_dist = 0.08) {
  auto x = random_separated_design(n, d, rng, min_dist);
  auto y = smooth_outputs(x);
  return gpemu::new_dataset(std::move(x), std::move(y));
}

inline std::vector<double> random_theta(std::size_t d, gpemu::detail::Rng& rng, double lo = 0.3,
                                        double hi = 5.0) {
  std::vector<double> theta(d);
  for (std::size_t k = 0; k < d; ++k) theta[k] = rng.uniform(lo, hi);
  return theta;
}

}  // namespace test_helpers
