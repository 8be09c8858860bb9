#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "gpemu/detail/rng.hpp"
#include "gpemu/errors.hpp"
#include "gpemu/matrix.hpp"

namespace gpemu {

/// Parameters of a maximin Latin hypercube design run.
struct DesignSpec {
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  /// Number of candidate column-entry swaps tried after the random start.
  std::size_t exchange_budget = 10000;

  void validate() const {
    if (n < 2) throw ValidationError("DesignSpec: n must be at least 2");
    if (d < 1) throw ValidationError("DesignSpec: d must be at least 1");
  }
};

namespace detail {

/// Random Latin hypercube: one point per axis stratum [i/n, (i+1)/n) in every
/// dimension.
inline Matrix<double> random_lhd(std::size_t n, std::size_t d, Rng& rng) {
  Matrix<double> x(n, d);
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i + 1));
      std::swap(perm[i], perm[j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      x(i, k) = (static_cast<double>(perm[i]) + rng.uniform01()) / static_cast<double>(n);
    }
  }
  return x;
}

inline double squared_distance(const Matrix<double>& x, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.cols(); ++k) {
    const double diff = x(a, k) - x(b, k);
    s += diff * diff;
  }
  return s;
}

/// Tracks pairwise squared distances with per-row minima so a column-entry
/// swap can be scored in O(n d).
class MinDistanceTracker {
 public:
  explicit MinDistanceTracker(const Matrix<double>& x)
      : n_(x.rows()), dist_(n_, n_, 0.0), row_min_(n_), row_arg_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double d2 = squared_distance(x, i, j);
        dist_(i, j) = d2;
        dist_(j, i) = d2;
      }
    }
    for (std::size_t i = 0; i < n_; ++i) recompute_row(i);
  }

  double global_min() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) m = std::min(m, row_min_[i]);
    return m;
  }

  /// Refresh all distances involving rows a and b after their coordinates
  /// changed. Rows whose cached minimum pointed at a or b are recomputed.
  void rows_changed(const Matrix<double>& x, std::size_t a, std::size_t b) {
    for (std::size_t r = 0; r < n_; ++r) {
      if (r == a || r == b) continue;
      for (std::size_t c : {a, b}) {
        const double d2 = squared_distance(x, r, c);
        dist_(r, c) = d2;
        dist_(c, r) = d2;
      }
    }
    const double dab = squared_distance(x, a, b);
    dist_(a, b) = dab;
    dist_(b, a) = dab;
    recompute_row(a);
    recompute_row(b);
    for (std::size_t r = 0; r < n_; ++r) {
      if (r == a || r == b) continue;
      if (row_arg_[r] == a || row_arg_[r] == b) {
        recompute_row(r);
      } else {
        for (std::size_t c : {a, b}) {
          if (dist_(r, c) < row_min_[r]) {
            row_min_[r] = dist_(r, c);
            row_arg_[r] = c;
          }
        }
      }
    }
  }

 private:
  void recompute_row(std::size_t r) {
    double m = std::numeric_limits<double>::infinity();
    std::size_t arg = r;
    for (std::size_t c = 0; c < n_; ++c) {
      if (c == r) continue;
      if (dist_(r, c) < m) {
        m = dist_(r, c);
        arg = c;
      }
    }
    row_min_[r] = m;
    row_arg_[r] = arg;
  }

  std::size_t n_;
  Matrix<double> dist_;
  std::vector<double> row_min_;
  std::vector<std::size_t> row_arg_;
};

}  // namespace detail

/// Maximin Latin hypercube design: a random LHD start followed by
/// exchange_budget random column-entry swaps, each accepted only when it
/// strictly increases the minimum pairwise Euclidean distance. Swapping two
/// entries within a column preserves the Latin property, so every iterate is
/// an LHD. Deterministic given the seed.
inline Matrix<double> maximin_lhd(const DesignSpec& spec) {
  spec.validate();
  detail::Rng rng(detail::derive_seed(spec.seed, 0x1d64ull));
  Matrix<double> x = detail::random_lhd(spec.n, spec.d, rng);
  // With n == 2 a column swap only negates the single pair difference, so
  // no exchange can improve the distance.
  if (spec.exchange_budget == 0 || spec.n == 2) return x;

  detail::MinDistanceTracker tracker(x);
  double current = tracker.global_min();

  for (std::size_t iter = 0; iter < spec.exchange_budget; ++iter) {
    const auto k = static_cast<std::size_t>(rng.below(spec.d));
    const auto a = static_cast<std::size_t>(rng.below(spec.n));
    auto b = static_cast<std::size_t>(rng.below(spec.n - 1));
    if (b >= a) ++b;

    std::swap(x(a, k), x(b, k));
    tracker.rows_changed(x, a, b);
    const double proposed = tracker.global_min();
    if (proposed > current) {
      current = proposed;
    } else {
      // Revert; recomputing from the restored coordinates restores the
      // tracker exactly (distances are pure functions of x).
      std::swap(x(a, k), x(b, k));
      tracker.rows_changed(x, a, b);
    }
  }
  return x;
}

// --- Test simulators --------------------------------------------------------

/// Goldstein-Price on its conventional [-2, 2]^2 domain, log-transformed,
/// with the unit square mapped affinely onto the domain. The polynomial is
/// strictly positive there (minimum 3 at (0, -1)), so the log is total.
inline double goldstein_price_log(std::span<const double> x) {
  if (x.size() != 2) throw ValidationError("goldstein_price_log: expected 2 coordinates");
  const double u = 4.0 * x[0] - 2.0;
  const double v = 4.0 * x[1] - 2.0;
  const double a = u + v + 1.0;
  const double b = 19.0 - 14.0 * u + 3.0 * u * u - 14.0 * v + 6.0 * u * v + 3.0 * v * v;
  const double c = 2.0 * u - 3.0 * v;
  const double e = 18.0 - 32.0 * u + 12.0 * u * u + 48.0 * v - 36.0 * u * v + 27.0 * v * v;
  const double gp = (1.0 + a * a * b) * (30.0 + c * c * e);
  return std::log(gp);
}

/// Six-dimensional Hartman function on the unit hypercube (its natural
/// domain), standard constants. Global minimum about -3.32237.
inline double hartman6(std::span<const double> x) {
  if (x.size() != 6) throw ValidationError("hartman6: expected 6 coordinates");
  static constexpr std::array<double, 4> alpha = {1.0, 1.2, 3.0, 3.2};
  static constexpr std::array<std::array<double, 6>, 4> A = {{
      {10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
      {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
      {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
      {17.0, 8.0, 0.05, 10.0, 0.1, 14.0},
  }};
  static constexpr std::array<std::array<double, 6>, 4> P = {{
      {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
      {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
      {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
      {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381},
  }};
  double outer = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      const double diff = x[j] - P[i][j];
      inner += A[i][j] * diff * diff;
    }
    outer += alpha[i] * std::exp(-inner);
  }
  return -outer;
}

/// The two simulators of the benchmark protocol.
enum class TestFunction { kGoldsteinPriceLog, kHartman6 };

inline std::string_view test_function_name(TestFunction f) {
  return f == TestFunction::kGoldsteinPriceLog ? "goldstein_price_log" : "hartman6";
}

inline TestFunction parse_test_function(std::string_view name) {
  if (name == "goldstein_price_log" || name == "goldstein_price" || name == "goldprice") {
    return TestFunction::kGoldsteinPriceLog;
  }
  if (name == "hartman6" || name == "hartman") return TestFunction::kHartman6;
  throw ConfigError("unknown test function '" + std::string(name) +
                    "' (expected goldstein_price_log|hartman6)");
}

inline std::size_t test_function_dim(TestFunction f) {
  return f == TestFunction::kGoldsteinPriceLog ? 2 : 6;
}

inline double evaluate_test_function(TestFunction f, std::span<const double> x) {
  return f == TestFunction::kGoldsteinPriceLog ? goldstein_price_log(x) : hartman6(x);
}

inline std::vector<double> evaluate_test_function_rows(TestFunction f, const Matrix<double>& x) {
  std::vector<double> y(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) y[i] = evaluate_test_function(f, x.row(i));
  return y;
}

}  // namespace gpemu
