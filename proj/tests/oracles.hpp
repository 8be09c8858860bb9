#pragma once

// Brute-force reference implementations used only by tests. Everything here
// goes through explicit determinants/inverses (cofactor expansion, adjugate)
// and std::pow, deliberately sharing no code with the factorization-based
// library paths it checks. Exponential cost; keep n <= 10.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "gpemu/matrix.hpp"

namespace oracle {

using gpemu::Matrix;

inline double determinant(const Matrix<double>& a) {
  const std::size_t n = a.rows();
  if (n == 1) return a(0, 0);
  double det = 0.0;
  double sign = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    Matrix<double> minor(n - 1, n - 1);
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t mj = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, mj++) = a(i, j);
      }
    }
    det += sign * a(0, c) * determinant(minor);
    sign = -sign;
  }
  return det;
}

inline Matrix<double> inverse(const Matrix<double>& a) {
  const std::size_t n = a.rows();
  const double det = determinant(a);
  Matrix<double> inv(n, n);
  if (n == 1) {
    inv(0, 0) = 1.0 / det;
    return inv;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Matrix<double> minor(n - 1, n - 1);
      std::size_t mi = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (r == i) continue;
        std::size_t mj = 0;
        for (std::size_t c = 0; c < n; ++c) {
          if (c == j) continue;
          minor(mi, mj++) = a(r, c);
        }
        ++mi;
      }
      const double cofactor = (((i + j) % 2 == 0) ? 1.0 : -1.0) * determinant(minor);
      inv(j, i) = cofactor / det;  // adjugate transposes
    }
  }
  return inv;
}

/// Power-exponential correlation matrix from first principles (both
/// triangles computed independently, std::pow for |.|^p).
inline Matrix<double> corr_matrix(const Matrix<double>& x, std::span<const double> theta, double p,
                                  double nugget, double jitter = 0.0) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Matrix<double> r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        r(i, j) = 1.0 + nugget + jitter;
        continue;
      }
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += theta[k] * std::pow(std::abs(x(i, k) - x(j, k)), p);
      r(i, j) = std::exp(-s);
    }
  }
  return r;
}

inline std::vector<double> corr_vector(std::span<const double> x_star, const Matrix<double>& x,
                                       std::span<const double> theta, double p) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += theta[k] * std::pow(std::abs(x_star[k] - x(i, k)), p);
    r[i] = std::exp(-s);
  }
  return r;
}

struct ProfileResult {
  double neg2_log_lik;
  double mu_hat;
  double sigma2_hat;
  double log_det;
};

/// Profile objective log|R| + n log[(Y - 1 mu)' R^-1 (Y - 1 mu)] via the
/// explicit inverse and cofactor determinant.
inline ProfileResult profile(const Matrix<double>& x, std::span<const double> y,
                             std::span<const double> theta, double p, double nugget,
                             double jitter = 0.0) {
  const std::size_t n = x.rows();
  const Matrix<double> r = corr_matrix(x, theta, p, nugget, jitter);
  const Matrix<double> rinv = inverse(r);
  const double det = determinant(r);

  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      num += rinv(i, j) * y[j];
      den += rinv(i, j);
    }
  }
  const double mu = num / den;

  double qf = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) qf += (y[i] - mu) * rinv(i, j) * (y[j] - mu);
  }
  const double sigma2 = qf / static_cast<double>(n);
  return {std::log(det) + static_cast<double>(n) * std::log(qf), mu, sigma2, std::log(det)};
}

/// Kriging mean mu + r(x*)' R^-1 (Y - 1 mu) through the explicit inverse.
inline double predict(const Matrix<double>& x, std::span<const double> y,
                      std::span<const double> theta, double p, double nugget,
                      std::span<const double> x_star) {
  const std::size_t n = x.rows();
  const Matrix<double> rmat = corr_matrix(x, theta, p, nugget);
  const Matrix<double> rinv = inverse(rmat);
  const ProfileResult prof = profile(x, y, theta, p, nugget);
  const std::vector<double> r = corr_vector(x_star, x, theta, p);
  double acc = prof.mu_hat;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) acc += r[i] * rinv(i, j) * (y[j] - prof.mu_hat);
  }
  return acc;
}

/// Full (unprofiled) Gaussian -2 log likelihood at explicit (mu, sigma2):
/// n log(2 pi sigma2) + log|R| + QF(mu) / sigma2.
inline double unprofiled_neg2(const Matrix<double>& x, std::span<const double> y,
                              std::span<const double> theta, double p, double nugget, double mu,
                              double sigma2) {
  const std::size_t n = x.rows();
  const Matrix<double> r = corr_matrix(x, theta, p, nugget);
  const Matrix<double> rinv = inverse(r);
  double qf = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) qf += (y[i] - mu) * rinv(i, j) * (y[j] - mu);
  }
  return static_cast<double>(n) * std::log(2.0 * std::numbers::pi * sigma2) +
         std::log(determinant(r)) + qf / sigma2;
}

}  // namespace oracle
