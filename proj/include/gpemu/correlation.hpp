#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gpemu/core.hpp"
#include "gpemu/detail/thread_pool.hpp"
#include "gpemu/matrix.hpp"

namespace gpemu {

/// Dense symmetric correlation matrix: unit-plus-nugget diagonal,
/// off-diagonal entries in (0, 1]. Each off-diagonal value is computed once
/// and mirrored, so values(i,j) == values(j,i) exactly.
template <typename Scalar>
struct CorrelationMatrix {
  Matrix<Scalar> values;
  Scalar nugget{};

  std::size_t n() const { return values.rows(); }
};

namespace detail {

/// |delta|^p as exp(p * log|delta|), short-circuiting delta == 0 to 0 so the
/// log never sees a zero argument. Same semantics in both precisions.
template <typename Scalar>
inline Scalar pow_abs(Scalar delta, Scalar p) {
  if (delta == Scalar(0)) return Scalar(0);
  const Scalar a = delta < Scalar(0) ? -delta : delta;
  return std::exp(p * std::log(a));
}

/// Sequential weighted sum sum_k theta_k * term_k. Every correlation path
/// (stateless build, cached plan, cross-correlation vector) funnels through
/// this one non-inlined function so the compiler emits a single rounding
/// pattern and the paths agree bitwise.
template <typename Scalar>
[[gnu::noinline]] inline Scalar theta_weighted_sum(const Scalar* theta, const Scalar* terms,
                                                   std::size_t d) {
  Scalar s = 0;
  for (std::size_t k = 0; k < d; ++k) s += theta[k] * terms[k];
  return s;
}

/// Row index of lower-triangle pair `pair` (pairs ordered (1,0), (2,0),
/// (2,1), (3,0), ...; row i owns pairs [i(i-1)/2, i(i+1)/2)).
inline std::size_t row_of_pair(std::size_t pair) {
  auto i = static_cast<std::size_t>((std::sqrt(8.0 * static_cast<double>(pair) + 1.0) + 1.0) / 2.0);
  while (i * (i - 1) / 2 > pair) --i;
  while ((i + 1) * i / 2 <= pair) ++i;
  return i;
}

template <typename Scalar>
inline void check_corr_value(Scalar v, std::atomic<bool>& bad) {
  if (!std::isfinite(v)) bad.store(true, std::memory_order_relaxed);
}

}  // namespace detail

/// Cross-correlations between one test point and every training point.
/// No nugget: it applies to the training diagonal only.
template <typename Scalar>
std::vector<Scalar> corr_vector(std::span<const Scalar> x_star, const Matrix<Scalar>& X,
                                const Hyperparameters& params) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  params.validate(d);
  if (x_star.size() != d) throw ValidationError("corr_vector: test point dimension mismatch");
  const auto p = static_cast<Scalar>(params.p);

  std::vector<Scalar> theta(d);
  for (std::size_t k = 0; k < d; ++k) theta[k] = static_cast<Scalar>(params.theta[k]);

  std::vector<Scalar> r(n);
  std::vector<Scalar> terms(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = X.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      terms[k] = detail::pow_abs(static_cast<Scalar>(x_star[k] - xi[k]), p);
    }
    const Scalar s = detail::theta_weighted_sum(theta.data(), terms.data(), d);
    r[i] = std::exp(-s);
    if (!std::isfinite(r[i])) throw Error("corr_vector: non-finite correlation value");
  }
  return r;
}

/// Power-exponential correlation matrix over the training design:
/// R_ij = exp(-sum_k theta_k |x_ik - x_jk|^p) off the diagonal, 1 + nugget on
/// it. Only the strict lower triangle is computed, then mirrored. Pair
/// evaluations may run in parallel (chunked by lower-triangle index); the sum
/// over k within one pair is always sequential, so the result is bitwise
/// independent of the degree of parallelism.
template <typename Scalar>
CorrelationMatrix<Scalar> build_corr_matrix(const Matrix<Scalar>& X, const Hyperparameters& params,
                                            detail::ThreadPool* pool = nullptr) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  params.validate(d);
  const auto p = static_cast<Scalar>(params.p);
  const auto nugget = static_cast<Scalar>(params.nugget);

  std::vector<Scalar> theta(d);
  for (std::size_t k = 0; k < d; ++k) theta[k] = static_cast<Scalar>(params.theta[k]);

  CorrelationMatrix<Scalar> R{Matrix<Scalar>(n, n), nugget};
  auto& values = R.values;
  const Scalar diag = Scalar(1) + nugget;
  for (std::size_t i = 0; i < n; ++i) values(i, i) = diag;

  std::atomic<bool> bad{false};
  const std::size_t pairs = n * (n - 1) / 2;
  auto work = [&](std::size_t lo, std::size_t hi) {
    std::size_t i = detail::row_of_pair(lo);
    std::size_t j = lo - i * (i - 1) / 2;
    std::vector<Scalar> terms(d);
    for (std::size_t pair = lo; pair < hi; ++pair) {
      const auto xi = X.row(i);
      const auto xj = X.row(j);
      for (std::size_t k = 0; k < d; ++k) {
        terms[k] = detail::pow_abs(static_cast<Scalar>(xi[k] - xj[k]), p);
      }
      const Scalar s = detail::theta_weighted_sum(theta.data(), terms.data(), d);
      const Scalar v = std::exp(-s);
      detail::check_corr_value(v, bad);
      values(i, j) = v;
      values(j, i) = v;
      if (++j == i) {
        ++i;
        j = 0;
      }
    }
  };
  if (pool) {
    pool->parallel_for(0, pairs, work, /*min_parallel=*/2048);
  } else if (pairs > 0) {
    work(0, pairs);
  }
  if (bad.load()) throw Error("build_corr_matrix: non-finite correlation value");
  return R;
}

/// Precomputed |x_ik - x_jk|^p table for one design. Building R for a new
/// theta then costs d multiplies and one exp per pair, with arithmetic
/// identical to build_corr_matrix (same terms, same summation order), so the
/// two paths agree bitwise. This is what makes thousands of likelihood
/// evaluations over a fixed design affordable.
template <typename Scalar>
class CorrelationPlan {
 public:
  CorrelationPlan(const Matrix<Scalar>& X, Scalar p, detail::ThreadPool* pool = nullptr)
      : n_(X.rows()), d_(X.cols()), pow_dist_(n_ * (n_ - 1) / 2 * d_) {
    auto work = [&](std::size_t lo, std::size_t hi) {
      std::size_t i = detail::row_of_pair(lo);
      std::size_t j = lo - i * (i - 1) / 2;
      for (std::size_t pair = lo; pair < hi; ++pair) {
        const auto xi = X.row(i);
        const auto xj = X.row(j);
        Scalar* out = pow_dist_.data() + pair * d_;
        for (std::size_t k = 0; k < d_; ++k) {
          out[k] = detail::pow_abs(static_cast<Scalar>(xi[k] - xj[k]), p);
        }
        if (++j == i) {
          ++i;
          j = 0;
        }
      }
    };
    const std::size_t pairs = n_ * (n_ - 1) / 2;
    if (pool) {
      pool->parallel_for(0, pairs, work, 2048);
    } else if (pairs > 0) {
      work(0, pairs);
    }
  }

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }

  /// Fills R (values resized as needed) for the given theta. Bitwise
  /// identical to build_corr_matrix on the same design for any pool size.
  void build_into(CorrelationMatrix<Scalar>& R, std::span<const Scalar> theta, Scalar nugget,
                  detail::ThreadPool* pool = nullptr) const {
    if (theta.size() != d_) throw ValidationError("CorrelationPlan: theta length mismatch");
    if (R.values.rows() != n_ || R.values.cols() != n_) R.values = Matrix<Scalar>(n_, n_);
    R.nugget = nugget;
    auto& values = R.values;
    const Scalar diag = Scalar(1) + nugget;
    for (std::size_t i = 0; i < n_; ++i) values(i, i) = diag;

    std::atomic<bool> bad{false};
    const Scalar* th = theta.data();
    const std::size_t d = d_;
    auto work = [&](std::size_t lo, std::size_t hi) {
      std::size_t i = detail::row_of_pair(lo);
      std::size_t j = lo - i * (i - 1) / 2;
      const Scalar* pd = pow_dist_.data() + lo * d;
      for (std::size_t pair = lo; pair < hi; ++pair) {
        const Scalar s = detail::theta_weighted_sum(th, pd, d);
        pd += d;
        const Scalar v = std::exp(-s);
        detail::check_corr_value(v, bad);
        values(i, j) = v;
        values(j, i) = v;
        if (++j == i) {
          ++i;
          j = 0;
        }
      }
    };
    const std::size_t pairs = n_ * (n_ - 1) / 2;
    if (pool) {
      pool->parallel_for(0, pairs, work, 2048);
    } else if (pairs > 0) {
      work(0, pairs);
    }
    if (bad.load()) throw Error("CorrelationPlan: non-finite correlation value");
  }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<Scalar> pow_dist_;
};

}  // namespace gpemu
