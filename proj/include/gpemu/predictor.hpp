#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gpemu/correlation.hpp"
#include "gpemu/detail/thread_pool.hpp"
#include "gpemu/likelihood.hpp"
#include "gpemu/matrix.hpp"

namespace gpemu {

/// Kriging point predictions at test inputs:
/// yhat(x*) = mu_hat + r(x*)' alpha with the alpha vector cached in the
/// model, so prediction costs one cross-correlation vector per point and no
/// further factorization or solves. Points are independent; a pool only
/// changes who computes which prediction, never the values.
template <typename Scalar>
std::vector<double> predict(const GpModel<Scalar>& model, const Matrix<double>& test_inputs,
                            detail::ThreadPool* pool = nullptr) {
  const std::size_t d = model.dataset.d();
  if (test_inputs.cols() != d) throw ValidationError("predict: test input dimension mismatch");
  const std::size_t count = test_inputs.rows();
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      const double x = test_inputs(j, k);
      if (x < -kUnitCubeTolerance || x > 1.0 + kUnitCubeTolerance || !std::isfinite(x)) {
        throw ValidationError("predict: test point outside the unit cube");
      }
    }
  }

  std::vector<double> predictions(count);
  auto work = [&](std::size_t lo, std::size_t hi) {
    std::vector<Scalar> x(d);
    for (std::size_t j = lo; j < hi; ++j) {
      for (std::size_t k = 0; k < d; ++k) x[k] = static_cast<Scalar>(test_inputs(j, k));
      const auto r = corr_vector<Scalar>(x, model.inputs_scalar, model.params);
      predictions[j] = model.mu_hat + dot_accumulate<Scalar>(r, model.alpha);
    }
  };
  if (pool) {
    pool->parallel_for(0, count, work, /*min_parallel=*/8);
  } else if (count > 0) {
    work(0, count);
  }
  return predictions;
}

/// Sum of squared prediction errors over a held-out test set.
inline double sspe(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) throw ValidationError("sspe: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = truth[i] - predictions[i];
    s += e * e;
  }
  return s;
}

/// Predictions bundled with their inputs and, when truth was supplied, the
/// SSPE against it.
struct PredictionSet {
  Matrix<double> test_inputs;
  std::vector<double> predictions;
  double sspe = 0.0;
};

template <typename Scalar>
PredictionSet predict_set(const GpModel<Scalar>& model, Matrix<double> test_inputs,
                          std::span<const double> truth = {}, detail::ThreadPool* pool = nullptr) {
  PredictionSet out;
  out.predictions = predict(model, test_inputs, pool);
  out.test_inputs = std::move(test_inputs);
  if (!truth.empty()) out.sspe = sspe(out.predictions, truth);
  return out;
}

}  // namespace gpemu
