#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gpemu/correlation.hpp"
#include "gpemu/detail/thread_pool.hpp"
#include "gpemu/errors.hpp"
#include "gpemu/matrix.hpp"

namespace gpemu {

/// Per-session operation counts mirroring the cost model of GP fitting:
/// correlation-matrix evaluations, factorizations, and triangular solves.
struct LedgerCounts {
  std::uint64_t r_builds = 0;
  std::uint64_t factorizations = 0;
  std::uint64_t triangular_solves = 0;
};

/// Monotone, atomically updated counters. One ledger per backend instance;
/// a fresh backend is a fresh session with all counts zero.
class Ledger {
 public:
  void add_r_build() { r_builds_.fetch_add(1, std::memory_order_relaxed); }
  void add_factorization() { factorizations_.fetch_add(1, std::memory_order_relaxed); }
  void add_triangular_solves(std::uint64_t k) { solves_.fetch_add(k, std::memory_order_relaxed); }

  LedgerCounts snapshot() const {
    return {r_builds_.load(std::memory_order_relaxed), factorizations_.load(std::memory_order_relaxed),
            solves_.load(std::memory_order_relaxed)};
  }

 private:
  std::atomic<std::uint64_t> r_builds_{0};
  std::atomic<std::uint64_t> factorizations_{0};
  std::atomic<std::uint64_t> solves_{0};
};

/// Cholesky factor of R + jitter*I. Only the lower triangle of `lower` is
/// meaningful; the strict upper part is scratch. log_det is log|R + jitter*I|
/// accumulated in double regardless of Scalar.
template <typename Scalar>
struct CorrelationFactor {
  Matrix<Scalar> lower;
  double log_det = 0.0;
  double jitter_used = 0.0;

  std::size_t n() const { return lower.rows(); }

  /// L with the scratch upper triangle zeroed (test/debug convenience).
  Matrix<Scalar> dense_lower() const {
    Matrix<Scalar> out(lower.rows(), lower.cols(), Scalar(0));
    for (std::size_t i = 0; i < lower.rows(); ++i) {
      for (std::size_t j = 0; j <= i; ++j) out(i, j) = lower(i, j);
    }
    return out;
  }
};

enum class BackendKind { kReferenceSequential, kParallelBlocked, kAccelerated };

/// Diagonal inflation attempts, smallest first. Realizes the nugget remedy
/// for near-singular R without touching the user-requested nugget; the value
/// actually applied is reported in CorrelationFactor::jitter_used.
inline constexpr std::array<double, 6> kJitterLadder = {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};

/// Dense linear-algebra engine behind the GP fit: factorization of R,
/// triangular solves, log-determinant. Every backend kind implements the
/// same contracts; factorization is bitwise deterministic per kind and
/// independent of internal parallelism.
template <typename Scalar>
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendKind kind() const = 0;
  virtual std::string_view name() const = 0;

  /// Worker pool for data-parallel helpers (correlation builds, prediction);
  /// null for sequential backends.
  virtual detail::ThreadPool* pool() { return nullptr; }

  Ledger& ledger() { return ledger_; }
  const Ledger& ledger() const { return ledger_; }

  /// Cholesky of R + jitter*I, escalating jitter through kJitterLadder until
  /// factorization succeeds. Counts one factorization regardless of how many
  /// ladder steps were tried. Throws NotPositiveDefiniteError if the last
  /// ladder step still fails.
  void factorize_into(const CorrelationMatrix<Scalar>& R, CorrelationFactor<Scalar>& out) {
    ledger_.add_factorization();
    const std::size_t n = R.n();
    for (double jitter : kJitterLadder) {
      out.lower = R.values;
      if (jitter > 0.0) {
        for (std::size_t i = 0; i < n; ++i) out.lower(i, i) += static_cast<Scalar>(jitter);
      }
      if (try_cholesky(out.lower)) {
        double log_det = 0.0;
        for (std::size_t i = 0; i < n; ++i) log_det += std::log(static_cast<double>(out.lower(i, i)));
        out.log_det = 2.0 * log_det;
        out.jitter_used = jitter;
        return;
      }
    }
    throw NotPositiveDefiniteError("factorize: not positive definite at any jitter level (n = " +
                                   std::to_string(n) + ")");
  }

  CorrelationFactor<Scalar> factorize(const CorrelationMatrix<Scalar>& R) {
    CorrelationFactor<Scalar> f;
    factorize_into(R, f);
    return f;
  }

  /// Forward substitution: L u = b.
  void solve_lower_into(const CorrelationFactor<Scalar>& f, std::span<const Scalar> b,
                        std::span<Scalar> x) {
    ledger_.add_triangular_solves(1);
    const std::size_t n = f.n();
    const auto& L = f.lower;
    for (std::size_t i = 0; i < n; ++i) {
      Scalar s = b[i];
      const Scalar* row = L.data() + i * n;
      for (std::size_t j = 0; j < i; ++j) s -= row[j] * x[j];
      x[i] = s / row[i];
    }
  }

  /// Backward substitution: L^T x = b.
  void solve_upper_into(const CorrelationFactor<Scalar>& f, std::span<const Scalar> b,
                        std::span<Scalar> x) {
    ledger_.add_triangular_solves(1);
    const std::size_t n = f.n();
    const auto& L = f.lower;
    for (std::size_t ii = n; ii-- > 0;) {
      Scalar s = b[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= L(j, ii) * x[j];
      x[ii] = s / L(ii, ii);
    }
  }

  std::vector<Scalar> solve_lower(const CorrelationFactor<Scalar>& f, std::span<const Scalar> b) {
    std::vector<Scalar> x(b.size());
    solve_lower_into(f, b, x);
    return x;
  }

  /// (R + jitter*I) x = b via forward then backward substitution; two
  /// triangular solves in the ledger.
  std::vector<Scalar> solve_full(const CorrelationFactor<Scalar>& f, std::span<const Scalar> b) {
    std::vector<Scalar> u(b.size());
    solve_lower_into(f, b, u);
    std::vector<Scalar> x(b.size());
    solve_upper_into(f, u, x);
    return x;
  }

 protected:
  /// In-place Cholesky on the lower triangle; false when a pivot is not
  /// strictly positive (including NaN).
  virtual bool try_cholesky(Matrix<Scalar>& a) = 0;

 private:
  Ledger ledger_;
};

/// Textbook sequential Cholesky. The baseline every other backend is
/// checked against.
template <typename Scalar>
class ReferenceBackend final : public Backend<Scalar> {
 public:
  BackendKind kind() const override { return BackendKind::kReferenceSequential; }
  std::string_view name() const override { return "reference"; }

 protected:
  bool try_cholesky(Matrix<Scalar>& a) override {
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
      Scalar* rowj = a.data() + j * n;
      Scalar s = rowj[j];
      for (std::size_t t = 0; t < j; ++t) s -= rowj[t] * rowj[t];
      if (!(s > Scalar(0))) return false;
      const Scalar d = std::sqrt(s);
      rowj[j] = d;
      for (std::size_t i = j + 1; i < n; ++i) {
        Scalar* rowi = a.data() + i * n;
        Scalar v = rowi[j];
        for (std::size_t t = 0; t < j; ++t) v -= rowi[t] * rowj[t];
        rowi[j] = v / d;
      }
    }
    return true;
  }
};

/// Blocked right-looking Cholesky with panel solves and trailing updates
/// chunked across a worker pool. Block boundaries and per-entry arithmetic
/// are fixed by the blocking alone, so the factor is bitwise identical for
/// any thread count (including one).
template <typename Scalar>
class ParallelBackend final : public Backend<Scalar> {
 public:
  explicit ParallelBackend(unsigned threads = 0)
      : pool_(threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads) {}

  BackendKind kind() const override { return BackendKind::kParallelBlocked; }
  std::string_view name() const override { return "parallel"; }
  detail::ThreadPool* pool() override { return &pool_; }

 protected:
  static constexpr std::size_t kBlock = 64;

  bool try_cholesky(Matrix<Scalar>& a) override {
    const std::size_t n = a.rows();
    Scalar* A = a.data();

    for (std::size_t k0 = 0; k0 < n; k0 += kBlock) {
      const std::size_t kb = std::min(kBlock, n - k0);

      // Factor the diagonal block (unblocked; previous panels already applied).
      for (std::size_t j = k0; j < k0 + kb; ++j) {
        Scalar* rowj = A + j * n;
        Scalar s = rowj[j];
        for (std::size_t t = k0; t < j; ++t) s -= rowj[t] * rowj[t];
        if (!(s > Scalar(0))) return false;
        const Scalar d = std::sqrt(s);
        rowj[j] = d;
        for (std::size_t i = j + 1; i < k0 + kb; ++i) {
          Scalar* rowi = A + i * n;
          Scalar v = rowi[j];
          for (std::size_t t = k0; t < j; ++t) v -= rowi[t] * rowj[t];
          rowi[j] = v / d;
        }
      }
      if (k0 + kb == n) break;

      // Panel solve: rows below the block against the block's transpose.
      pool_.parallel_for(
          k0 + kb, n,
          [&](std::size_t rlo, std::size_t rhi) {
            for (std::size_t r = rlo; r < rhi; ++r) {
              Scalar* rowr = A + r * n;
              for (std::size_t j = k0; j < k0 + kb; ++j) {
                const Scalar* rowj = A + j * n;
                Scalar v = rowr[j];
                for (std::size_t t = k0; t < j; ++t) v -= rowr[t] * rowj[t];
                rowr[j] = v / rowj[j];
              }
            }
          },
          /*min_parallel=*/kBlock);

      // Trailing update: C(i0,j0) -= P_i0 * P_j0^T over all lower block pairs.
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t j0 = k0 + kb; j0 < n; j0 += kBlock) {
        for (std::size_t i0 = j0; i0 < n; i0 += kBlock) pairs.emplace_back(i0, j0);
      }
      pool_.parallel_for(
          0, pairs.size(),
          [&](std::size_t plo, std::size_t phi) {
            for (std::size_t idx = plo; idx < phi; ++idx) {
              const auto [i0, j0] = pairs[idx];
              const std::size_t ib = std::min(kBlock, n - i0);
              const std::size_t jb = std::min(kBlock, n - j0);
              update_tile(A, n, k0, kb, i0, ib, j0, jb);
            }
          },
          /*min_parallel=*/1);
    }
    return true;
  }

 private:
  /// C[i0:i0+ib, j0:j0+jb] -= A_panel(i0) * A_panel(j0)^T with the panel
  /// transposed into a packed buffer so the inner loop runs contiguously.
  /// Accumulation per entry is sequential in t; lane order never changes.
  static void update_tile(Scalar* A, std::size_t n, std::size_t k0, std::size_t kb,
                          std::size_t i0, std::size_t ib, std::size_t j0, std::size_t jb) {
    std::array<Scalar, kBlock * kBlock> packed;
    for (std::size_t c = 0; c < jb; ++c) {
      const Scalar* rowc = A + (j0 + c) * n + k0;
      for (std::size_t t = 0; t < kb; ++t) packed[t * jb + c] = rowc[t];
    }
    for (std::size_t r = 0; r < ib; ++r) {
      Scalar* crow = A + (i0 + r) * n + j0;
      const Scalar* arow = A + (i0 + r) * n + k0;
      // Diagonal tiles only need columns c <= global row; computing the full
      // tile would write scratch above the diagonal, which is harmless, but
      // the wasted flops are not.
      const std::size_t climit = (i0 == j0) ? std::min(jb, r + 1) : jb;
      for (std::size_t t = 0; t < kb; ++t) {
        const Scalar art = arow[t];
        const Scalar* prow = packed.data() + t * jb;
#pragma omp simd
        for (std::size_t c = 0; c < climit; ++c) crow[c] -= art * prow[c];
      }
    }
  }

  detail::ThreadPool pool_;
};

// --- Factory ----------------------------------------------------------------

template <typename Scalar>
using BackendFactory = std::function<std::unique_ptr<Backend<Scalar>>(unsigned threads)>;

/// Registry keyed by backend identifier. "reference" and "parallel" are
/// always present; an accelerated backend may be registered by the embedding
/// application without this library knowing about the hardware.
template <typename Scalar>
inline std::map<std::string, BackendFactory<Scalar>, std::less<>>& backend_registry() {
  static std::map<std::string, BackendFactory<Scalar>, std::less<>> registry = {
      {"reference", [](unsigned) { return std::make_unique<ReferenceBackend<Scalar>>(); }},
      {"parallel", [](unsigned threads) { return std::make_unique<ParallelBackend<Scalar>>(threads); }},
  };
  return registry;
}

template <typename Scalar>
void register_backend(const std::string& id, BackendFactory<Scalar> factory) {
  backend_registry<Scalar>()[id] = std::move(factory);
}

/// Creates a backend from its identifier ("reference", "parallel", or a
/// registered "accelerated"). threads == 0 means one lane per hardware core.
template <typename Scalar>
std::unique_ptr<Backend<Scalar>> make_backend(std::string_view id, unsigned threads = 0) {
  const auto& registry = backend_registry<Scalar>();
  const auto it = registry.find(id);
  if (it == registry.end()) {
    std::string msg = "unknown backend '" + std::string(id) + "'; available:";
    for (const auto& [name, _] : registry) msg += " " + name;
    if (id == "accelerated") msg += " (no accelerated backend registered in this build)";
    throw ConfigError(msg);
  }
  return it->second(threads);
}

}  // namespace gpemu
