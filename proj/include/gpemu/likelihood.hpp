#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gpemu/backend.hpp"
#include "gpemu/core.hpp"
#include "gpemu/correlation.hpp"
#include "gpemu/matrix.hpp"
#include "gpemu/optimizer.hpp"

namespace gpemu {

/// One profile-likelihood evaluation at a fixed theta. neg2_log_lik is
/// finite, or +inf when factorization failed at every jitter level (the GA
/// ranks that worst).
struct ProfileEval {
  std::vector<double> theta;
  double neg2_log_lik = std::numeric_limits<double>::infinity();
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  double jitter_used = 0.0;
};

/// Closed-form GLS mean: (1' R^-1 1)^-1 (1' R^-1 Y), evaluated through the
/// factor as (v.u)/(v.v) with u = L^-1 Y and v = L^-1 1. Exactly two
/// triangular solves.
template <typename Scalar>
double mu_hat(Backend<Scalar>& backend, const CorrelationFactor<Scalar>& f,
              std::span<const Scalar> y) {
  const std::size_t n = f.n();
  if (y.size() != n) throw ValidationError("mu_hat: output length mismatch");
  std::vector<Scalar> u(n), v(n);
  backend.solve_lower_into(f, y, u);
  const std::vector<Scalar> ones(n, Scalar(1));
  backend.solve_lower_into(f, ones, v);
  const double vtv = dot_accumulate<Scalar>(v, v);
  if (!(vtv > 0.0)) throw Error("mu_hat: degenerate denominator (broken factor)");
  return dot_accumulate<Scalar>(v, u) / vtv;
}

/// Closed-form variance (Y - 1 mu)' R^-1 (Y - 1 mu) / n via one extra solve.
template <typename Scalar>
double sigma2_hat(Backend<Scalar>& backend, const CorrelationFactor<Scalar>& f,
                  std::span<const Scalar> y, double mu) {
  const std::size_t n = f.n();
  if (y.size() != n) throw ValidationError("sigma2_hat: output length mismatch");
  std::vector<Scalar> rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = y[i] - static_cast<Scalar>(mu);
  std::vector<Scalar> w(n);
  backend.solve_lower_into(f, rhs, w);
  const double s = dot_accumulate<Scalar>(w, w) / static_cast<double>(n);
  return s < 0.0 ? 0.0 : s;
}

/// Solve-free variance path reusing the inner products from mu_hat:
/// w'w = u'u - 2 mu v'u + mu^2 v'v. Must agree with sigma2_hat to 1e-10
/// relative in double precision.
inline double sigma2_hat_from_parts(double utu, double vtu, double vtv, double mu, std::size_t n) {
  const double s = (utu - 2.0 * mu * vtu + mu * mu * vtv) / static_cast<double>(n);
  return s < 0.0 ? 0.0 : s;
}

/// Profile-likelihood machinery bound to one dataset, one backend and fixed
/// (p, nugget). Owns the powered-distance plan and reusable workspaces so an
/// optimizer can call eval() thousands of times without reallocating.
///
/// Each eval costs one R build, one factorization and two triangular solves
/// in the ledger (within the <= 7 budget of the cost model).
template <typename Scalar>
class ProfileEvaluator {
 public:
  ProfileEvaluator(const Dataset& data, double p, double nugget, Backend<Scalar>& backend)
      : backend_(backend),
        n_(data.n()),
        d_(data.d()),
        inputs_(data.inputs().template cast<Scalar>()),
        y_(cast_vector<Scalar>(data.outputs())),
        nugget_(static_cast<Scalar>(nugget)),
        plan_(inputs_, static_cast<Scalar>(p), backend.pool()),
        theta_scalar_(d_),
        u_(n_),
        v_(n_),
        ones_(n_, Scalar(1)) {
    Hyperparameters probe{std::vector<double>(d_, 1.0), p, nugget};
    probe.validate(d_);
  }

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }
  const std::vector<Scalar>& outputs() const { return y_; }
  const Matrix<Scalar>& inputs() const { return inputs_; }

  /// Largest jitter any factorization applied so far.
  double jitter_max() const { return jitter_max_; }

  /// The factor from the most recent successful eval (workspace; overwritten
  /// by the next call).
  const CorrelationFactor<Scalar>& last_factor() const { return factor_; }

  /// -2 log profile likelihood up to additive constants:
  /// log|R| + n log[(Y - 1 mu)' R^-1 (Y - 1 mu)]. Factorization failure at
  /// every jitter level maps to +inf rather than an exception.
  ProfileEval eval(std::span<const double> theta) {
    ProfileEval out;
    out.theta.assign(theta.begin(), theta.end());
    for (std::size_t k = 0; k < d_; ++k) theta_scalar_[k] = static_cast<Scalar>(theta[k]);

    plan_.build_into(corr_, theta_scalar_, nugget_, backend_.pool());
    backend_.ledger().add_r_build();
    try {
      backend_.factorize_into(corr_, factor_);
    } catch (const NotPositiveDefiniteError&) {
      return out;  // +inf objective
    }
    jitter_max_ = std::max(jitter_max_, factor_.jitter_used);

    backend_.solve_lower_into(factor_, std::span<const Scalar>(y_), std::span<Scalar>(u_));
    backend_.solve_lower_into(factor_, std::span<const Scalar>(ones_), std::span<Scalar>(v_));
    const double utu = dot_accumulate<Scalar>(u_, u_);
    const double vtu = dot_accumulate<Scalar>(v_, u_);
    const double vtv = dot_accumulate<Scalar>(v_, v_);
    if (!(vtv > 0.0)) return out;

    const double mu = vtu / vtv;
    const double sigma2 = sigma2_hat_from_parts(utu, vtu, vtv, mu, n_);
    const double qf = static_cast<double>(n_) * sigma2;
    // Floor the quadratic form so a degenerate (constant) response yields a
    // huge negative yet finite objective instead of -inf.
    const double qf_floored = std::max(qf, std::numeric_limits<double>::min());

    out.mu_hat = mu;
    out.sigma2_hat = sigma2;
    out.jitter_used = factor_.jitter_used;
    out.neg2_log_lik = factor_.log_det + static_cast<double>(n_) * std::log(qf_floored);
    return out;
  }

 private:
  Backend<Scalar>& backend_;
  std::size_t n_;
  std::size_t d_;
  Matrix<Scalar> inputs_;
  std::vector<Scalar> y_;
  Scalar nugget_;
  CorrelationPlan<Scalar> plan_;
  CorrelationMatrix<Scalar> corr_;
  CorrelationFactor<Scalar> factor_;
  std::vector<Scalar> theta_scalar_;
  std::vector<Scalar> u_;
  std::vector<Scalar> v_;
  std::vector<Scalar> ones_;
  double jitter_max_ = 0.0;
};

/// One-shot profile objective evaluation (op form of ProfileEvaluator::eval).
template <typename Scalar>
ProfileEval neg2_log_profile(std::span<const double> theta, const Dataset& data,
                             const FitConfig& cfg, Backend<Scalar>& backend) {
  ProfileEvaluator<Scalar> evaluator(data, cfg.p, cfg.nugget, backend);
  return evaluator.eval(theta);
}

/// Fitted GP emulator: data, estimated hyperparameters, closed-form mu/sigma2
/// at the optimum, the cached factorization and the solve vector
/// alpha = (R + jitter I)^-1 (Y - 1 mu).
template <typename Scalar>
struct GpModel {
  Dataset dataset;
  Hyperparameters params;
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  double neg2_log_lik = 0.0;
  CorrelationFactor<Scalar> factor;
  std::vector<Scalar> alpha;
  /// Training inputs cast to the working precision (prediction reuses them).
  Matrix<Scalar> inputs_scalar;
};

template <typename Scalar>
struct FitResult {
  GpModel<Scalar> model;
  GaTrace trace;
  double jitter_max = 0.0;
};

/// Residual ratio ||(R + jitter I) alpha - (Y - 1 mu)||_inf / ||Y||_inf.
/// Rebuilds the correlation matrix from the stored hyperparameters; the
/// GpModel contract keeps this at or below 1e-6 in double precision.
template <typename Scalar>
double model_alpha_residual(const GpModel<Scalar>& model) {
  const std::size_t n = model.dataset.n();
  const auto R = build_corr_matrix(model.inputs_scalar, model.params);
  double worst = 0.0;
  double ymax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double rij = static_cast<double>(R.values(i, j));
      if (i == j) rij += model.factor.jitter_used;
      row += rij * static_cast<double>(model.alpha[j]);
    }
    const double rhs = model.dataset.outputs()[i] - model.mu_hat;
    worst = std::max(worst, std::abs(row - rhs));
    ymax = std::max(ymax, std::abs(model.dataset.outputs()[i]));
  }
  return ymax > 0.0 ? worst / ymax : worst;
}

/// Assembles a model at a fixed theta (no optimization): one objective
/// evaluation plus the alpha solve.
template <typename Scalar>
GpModel<Scalar> model_at_theta(const Dataset& data, std::span<const double> theta, double p,
                               double nugget, Backend<Scalar>& backend) {
  ProfileEvaluator<Scalar> evaluator(data, p, nugget, backend);
  const ProfileEval ev = evaluator.eval(theta);
  if (!std::isfinite(ev.neg2_log_lik)) {
    throw NotPositiveDefiniteError("model_at_theta: factorization failed at the requested theta");
  }
  CorrelationFactor<Scalar> factor = evaluator.last_factor();
  const auto& y = evaluator.outputs();
  std::vector<Scalar> rhs(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) rhs[i] = y[i] - static_cast<Scalar>(ev.mu_hat);
  std::vector<Scalar> alpha = backend.solve_full(factor, rhs);
  return GpModel<Scalar>{data,
                         Hyperparameters{ev.theta, p, nugget},
                         ev.mu_hat,
                         ev.sigma2_hat,
                         ev.neg2_log_lik,
                         std::move(factor),
                         std::move(alpha),
                         evaluator.inputs()};
}

/// Maximum-likelihood fit: GA search over theta in log10 space within
/// cfg.theta_bounds, exactly cfg.ga.budget() objective evaluations, then the
/// model is assembled from the best evaluation's cached factor (no extra
/// R build or factorization). Deterministic given (dataset, cfg.seed).
template <typename Scalar>
FitResult<Scalar> fit_gp_detailed(const Dataset& data, const FitConfig& cfg,
                                  Backend<Scalar>& backend) {
  const std::size_t d = data.d();
  const auto bounds = cfg.bounds_for(d);
  std::vector<std::pair<double, double>> log_bounds(d);
  for (std::size_t k = 0; k < d; ++k) {
    log_bounds[k] = {std::log10(bounds[k].first), std::log10(bounds[k].second)};
  }

  ProfileEvaluator<Scalar> evaluator(data, cfg.p, cfg.nugget, backend);

  // Stash of the best evaluation so far. Uses the same strict-improvement
  // rule as the GA's incumbent, so both always agree on the winner.
  struct Best {
    double value = std::numeric_limits<double>::infinity();
    ProfileEval eval;
    CorrelationFactor<Scalar> factor;
  } best;

  std::vector<double> theta(d);
  auto objective = [&](std::span<const double> genes) {
    for (std::size_t k = 0; k < d; ++k) theta[k] = std::pow(10.0, genes[k]);
    ProfileEval ev = evaluator.eval(theta);
    if (ev.neg2_log_lik < best.value) {
      best.value = ev.neg2_log_lik;
      best.eval = ev;
      best.factor = evaluator.last_factor();
    }
    return ev.neg2_log_lik;
  };

  GaConfig ga = cfg.ga;
  ga.seed = detail::derive_seed(cfg.seed, 0x9a5eedull);
  GaResult result = ga_minimize(objective, log_bounds, ga);

  if (!std::isfinite(best.value)) {
    throw FitError("fit_gp: every candidate failed factorization (n = " + std::to_string(data.n()) + ")");
  }
  if (result.best_value != best.value) {
    throw Error("fit_gp: optimizer incumbent diverged from evaluation stash");
  }

  const auto& y = evaluator.outputs();
  std::vector<Scalar> rhs(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) rhs[i] = y[i] - static_cast<Scalar>(best.eval.mu_hat);
  std::vector<Scalar> alpha = backend.solve_full(best.factor, rhs);

  FitResult<Scalar> out;
  out.model = GpModel<Scalar>{data,
                              Hyperparameters{best.eval.theta, cfg.p, cfg.nugget},
                              best.eval.mu_hat,
                              best.eval.sigma2_hat,
                              best.eval.neg2_log_lik,
                              std::move(best.factor),
                              std::move(alpha),
                              evaluator.inputs()};
  out.trace = std::move(result.trace);
  out.jitter_max = evaluator.jitter_max();
  return out;
}

template <typename Scalar>
GpModel<Scalar> fit_gp(const Dataset& data, const FitConfig& cfg, Backend<Scalar>& backend) {
  return fit_gp_detailed(data, cfg, backend).model;
}

}  // namespace gpemu
