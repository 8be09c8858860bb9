#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "gpemu/backend.hpp"
#include "gpemu/correlation.hpp"
#include "gpemu/detail/rng.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace gpemu;
using test_helpers::rel_diff;

namespace {

CorrelationMatrix<double> identity_corr(std::size_t n) {
  CorrelationMatrix<double> r{Matrix<double>(n, n, 0.0), 0.0};
  for (std::size_t i = 0; i < n; ++i) r.values(i, i) = 1.0;
  return r;
}

CorrelationMatrix<double> corr_2x2(double off) {
  return {Matrix<double>{{1.0, off}, {off, 1.0}}, 0.0};
}

/// Random correlation matrix from a separated design; jitter-free
/// factorizable by construction.
CorrelationMatrix<double> random_corr(std::size_t n, std::size_t d, detail::Rng& rng) {
  const auto x = test_helpers::random_separated_design(n, d, rng);
  return build_corr_matrix(x, Hyperparameters{test_helpers::random_theta(d, rng), 1.95, 0.0});
}

}  // namespace

TEST_CASE("factorize identity") {
  for (const char* id : {"reference", "parallel"}) {
    auto backend = make_backend<double>(id, 2);
    const auto f = backend->factorize(identity_corr(2));
    CHECK(f.lower(0, 0) == 1.0);
    CHECK(f.lower(1, 1) == 1.0);
    CHECK(f.lower(1, 0) == 0.0);
    CHECK(f.log_det == 0.0);
    CHECK(f.jitter_used == 0.0);
  }
}

TEST_CASE("factorize 2x2 with known factor") {
  auto backend = make_backend<double>("reference");
  const auto f = backend->factorize(corr_2x2(0.5));
  CHECK(f.lower(0, 0) == 1.0);
  CHECK(f.lower(1, 0) == 0.5);
  CHECK(rel_diff(f.lower(1, 1), 0.8660254037844386) < 1e-15);  // sqrt(0.75)
  CHECK(rel_diff(f.log_det, -0.2876820724517809) < 1e-12);     // log(1 - 0.25)
  CHECK(f.jitter_used == 0.0);
}

TEST_CASE("coincident points force the jitter ladder") {
  const Matrix<double> x{{0.3, 0.3}, {0.3, 0.3}, {0.7, 0.1}};
  const auto r = build_corr_matrix(x, Hyperparameters{{2.0, 2.0}, 1.95, 0.0});
  for (const char* id : {"reference", "parallel"}) {
    auto backend = make_backend<double>(id, 2);
    const auto f = backend->factorize(r);
    CHECK(f.jitter_used > 0.0);
    CHECK(std::find(kJitterLadder.begin(), kJitterLadder.end(), f.jitter_used) != kJitterLadder.end());
    // Reconstruction against R + jitter I.
    const std::size_t n = r.n();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double acc = 0.0;
        for (std::size_t t = 0; t <= j; ++t) acc += f.lower(i, t) * f.lower(j, t);
        const double target = r.values(i, j) + (i == j ? f.jitter_used : 0.0);
        worst = std::max(worst, std::abs(acc - target));
      }
    }
    CHECK(worst <= 1e-8 * static_cast<double>(n));
  }
}

TEST_CASE("factorize reports not-positive-definite when the ladder is exhausted") {
  CorrelationMatrix<double> bad{Matrix<double>{{1.0, 2.0}, {2.0, 1.0}}, 0.0};
  auto backend = make_backend<double>("reference");
  CHECK_THROWS_AS(backend->factorize(bad), NotPositiveDefiniteError);
  // The attempt still counts as one factorization.
  CHECK(backend->ledger().snapshot().factorizations == 1);
}

TEST_CASE("solve_lower examples") {
  auto backend = make_backend<double>("reference");
  SECTION("identity factor returns the right-hand side") {
    const auto f = backend->factorize(identity_corr(3));
    const std::vector<double> b{1.5, -2.0, 0.25};
    CHECK(backend->solve_lower(f, b) == b);
  }
  SECTION("hand forward substitution") {
    const auto f = backend->factorize(corr_2x2(0.5));
    const auto u = backend->solve_lower(f, std::vector<double>{1.0, 1.0});
    CHECK(u[0] == 1.0);
    CHECK(rel_diff(u[1], 0.5773502691896258) < 1e-15);  // 0.5 / sqrt(0.75)
  }
  SECTION("zero right-hand side") {
    const auto f = backend->factorize(corr_2x2(0.3));
    const auto u = backend->solve_lower(f, std::vector<double>{0.0, 0.0});
    CHECK(u == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("solve_full examples") {
  auto backend = make_backend<double>("reference");
  SECTION("identity") {
    const auto f = backend->factorize(identity_corr(2));
    const std::vector<double> b{3.0, -4.0};
    CHECK(backend->solve_full(f, b) == b);
  }
  SECTION("2x2 inverse application") {
    const auto f = backend->factorize(corr_2x2(0.5));
    const auto x = backend->solve_full(f, std::vector<double>{1.0, 1.0});
    CHECK(rel_diff(x[0], 2.0 / 3.0) < 1e-12);
    CHECK(rel_diff(x[1], 2.0 / 3.0) < 1e-12);
  }
  SECTION("zero right-hand side") {
    const auto f = backend->factorize(corr_2x2(0.5));
    const auto x = backend->solve_full(f, std::vector<double>{0.0, 0.0});
    CHECK(x == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("log-determinant and solves match the cofactor oracle for small n") {
  detail::Rng rng(8711);
  for (const char* id : {"reference", "parallel"}) {
    auto backend = make_backend<double>(id, 2);
    for (int iter = 0; iter < 15; ++iter) {
      const std::size_t n = 2 + rng.below(7);
      const std::size_t d = 1 + rng.below(3);
      const auto r = random_corr(n, d, rng);
      const auto f = backend->factorize(r);
      REQUIRE(f.jitter_used == 0.0);

      CHECK(rel_diff(f.log_det, std::log(oracle::determinant(r.values))) < 1e-9);

      std::vector<double> b(n);
      for (auto& v : b) v = rng.uniform(-2.0, 2.0);
      const auto solved = backend->solve_full(f, b);
      const auto rinv = oracle::inverse(r.values);
      for (std::size_t i = 0; i < n; ++i) {
        double want = 0.0;
        for (std::size_t j = 0; j < n; ++j) want += rinv(i, j) * b[j];
        CHECK(rel_diff(solved[i], want) < 1e-9);
      }
    }
  }
}

TEST_CASE("reconstruction bound holds for random instances") {
  detail::Rng rng(222);
  for (const char* id : {"reference", "parallel"}) {
    auto backend = make_backend<double>(id, 3);
    for (std::size_t n : {5u, 40u, 100u}) {
      const auto r = random_corr(n, 2, rng);
      const auto f = backend->factorize(r);
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          double acc = 0.0;
          for (std::size_t t = 0; t <= j; ++t) acc += f.lower(i, t) * f.lower(j, t);
          const double target = r.values(i, j) + (i == j ? f.jitter_used : 0.0);
          worst = std::max(worst, std::abs(acc - target));
        }
      }
      CHECK(worst <= 1e-8 * static_cast<double>(n));
    }
  }
}

TEST_CASE("solve_full round-trips L L^T x") {
  detail::Rng rng(5557);
  auto backend = make_backend<double>("parallel", 2);
  for (int iter = 0; iter < 10; ++iter) {
    const std::size_t n = 3 + rng.below(60);
    const auto r = random_corr(n, 2, rng);
    const auto f = backend->factorize(r);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    // b = L (L^T x)
    std::vector<double> t(n, 0.0), b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) t[i] += f.lower(j, i) * x[j];
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) b[i] += f.lower(i, j) * t[j];
    }
    const auto back = backend->solve_full(f, b);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel_diff(back[i], x[i]) < 1e-8);
  }
}

TEST_CASE("backends agree within tolerance") {
  detail::Rng rng(13);
  auto ref = make_backend<double>("reference");
  auto par = make_backend<double>("parallel", 3);
  auto ref_f = make_backend<float>("reference");
  auto par_f = make_backend<float>("parallel", 3);

  for (std::size_t n : {7u, 64u, 130u}) {
    const auto r = random_corr(n, 2, rng);
    std::vector<double> b(n);
    for (auto& v : b) v = rng.uniform(-2.0, 2.0);

    const auto fr = ref->factorize(r);
    const auto fp = par->factorize(r);
    CHECK(rel_diff(fr.log_det, fp.log_det) < 1e-10);
    const auto xr = ref->solve_full(fr, b);
    const auto xp = par->solve_full(fp, b);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel_diff(xr[i], xp[i]) < 1e-10);

    // Single-precision instances of the same matrix.
    CorrelationMatrix<float> rf{r.values.template cast<float>(), 0.0f};
    std::vector<float> bf(n);
    for (std::size_t i = 0; i < n; ++i) bf[i] = static_cast<float>(b[i]);
    const auto frf = ref_f->factorize(rf);
    const auto fpf = par_f->factorize(rf);
    CHECK(rel_diff(frf.log_det, fpf.log_det) < 1e-4);
    const auto xrf = ref_f->solve_full(frf, bf);
    const auto xpf = par_f->solve_full(fpf, bf);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(rel_diff(xrf[i], xpf[i]) < 1e-4);
    }
  }
}

TEST_CASE("factorization is deterministic and thread-count independent") {
  detail::Rng rng(314159);
  const auto r = random_corr(150, 3, rng);

  auto ref = make_backend<double>("reference");
  const auto f1 = ref->factorize(r);
  const auto f2 = ref->factorize(r);
  CHECK(f1.dense_lower() == f2.dense_lower());

  auto par1 = make_backend<double>("parallel", 1);
  auto par4 = make_backend<double>("parallel", 4);
  const auto p1 = par1->factorize(r);
  const auto p4 = par4->factorize(r);
  CHECK(p1.dense_lower() == p4.dense_lower());
  CHECK(p1.log_det == p4.log_det);

  const auto p4b = par4->factorize(r);
  CHECK(p4.dense_lower() == p4b.dense_lower());
}

TEST_CASE("ledger counts operations") {
  auto backend = make_backend<double>("parallel", 2);
  const auto fresh = backend->ledger().snapshot();
  CHECK(fresh.r_builds == 0);
  CHECK(fresh.factorizations == 0);
  CHECK(fresh.triangular_solves == 0);

  const auto f = backend->factorize(identity_corr(4));
  CHECK(backend->ledger().snapshot().factorizations == 1);

  const std::vector<double> b{1.0, 2.0, 3.0, 4.0};
  backend->solve_lower(f, b);
  CHECK(backend->ledger().snapshot().triangular_solves == 1);
  backend->solve_full(f, b);
  CHECK(backend->ledger().snapshot().triangular_solves == 3);
}

TEST_CASE("backend factory") {
  CHECK(make_backend<double>("reference")->kind() == BackendKind::kReferenceSequential);
  CHECK(make_backend<double>("parallel")->kind() == BackendKind::kParallelBlocked);
  CHECK_THROWS_AS(make_backend<double>("accelerated"), ConfigError);
  CHECK_THROWS_AS(make_backend<double>("gpu9000"), ConfigError);

  // The accelerated slot is an interface boundary: anything registered there
  // becomes constructible without library changes.
  struct FakeAccelerated final : ReferenceBackend<double> {
    BackendKind kind() const override { return BackendKind::kAccelerated; }
    std::string_view name() const override { return "accelerated"; }
  };
  register_backend<double>("accelerated", [](unsigned) { return std::make_unique<FakeAccelerated>(); });
  CHECK(make_backend<double>("accelerated")->kind() == BackendKind::kAccelerated);
  backend_registry<double>().erase("accelerated");
  CHECK_THROWS_AS(make_backend<double>("accelerated"), ConfigError);
}
