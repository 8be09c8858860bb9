#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "gpemu/correlation.hpp"
#include "gpemu/detail/rng.hpp"
#include "gpemu/detail/thread_pool.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace gpemu;
using test_helpers::rel_diff;

namespace {

Hyperparameters params(std::vector<double> theta, double p = 1.95, double nugget = 0.0) {
  return Hyperparameters{std::move(theta), p, nugget};
}

}  // namespace

TEST_CASE("coincident points correlate perfectly") {
  const Matrix<double> x{{0.2, 0.7}, {0.2, 0.7}};
  const auto r = build_corr_matrix(x, params({3.0, 5.0}));
  CHECK(r.values(0, 1) == 1.0);
  CHECK(r.values(1, 0) == 1.0);
  CHECK(r.values(0, 0) == 1.0);
  CHECK(r.values(1, 1) == 1.0);
}

TEST_CASE("zero decay gives the all-ones matrix") {
  const Matrix<double> x{{0.1}, {0.4}, {0.9}};
  const auto r = build_corr_matrix(x, params({0.0}));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(r.values(i, j) == 1.0);
  }
}

TEST_CASE("unit-separation pair matches the closed form") {
  const Matrix<double> x{{0.0}, {1.0}};
  const auto r = build_corr_matrix(x, params({2.0}));
  // exp(-2 * 1^1.95) = exp(-2)
  CHECK(rel_diff(r.values(0, 1), 0.1353352832366127) < 1e-15);
}

TEST_CASE("corr_vector basics") {
  const Matrix<double> x{{0.1, 0.3}, {0.6, 0.9}};
  SECTION("self-correlation is one") {
    const std::vector<double> star{0.1, 0.3};
    const auto r = corr_vector<double>(star, x, params({2.0, 4.0}));
    CHECK(r[0] == 1.0);
    CHECK(r[1] < 1.0);
  }
  SECTION("zero decay gives ones") {
    const std::vector<double> star{0.5, 0.5};
    const auto r = corr_vector<double>(star, x, params({0.0, 0.0}));
    CHECK(r[0] == 1.0);
    CHECK(r[1] == 1.0);
  }
  SECTION("gaussian special case at p = 2") {
    const Matrix<double> x1{{0.0}};
    const std::vector<double> star{0.5};
    const auto r = corr_vector<double>(star, x1, params({1.0}, 2.0));
    CHECK(rel_diff(r[0], 0.7788007830714049) < 1e-15);
  }
  SECTION("dimension mismatch throws") {
    const std::vector<double> star{0.5};
    CHECK_THROWS_AS(corr_vector<double>(star, x, params({1.0, 1.0})), ValidationError);
  }
}

TEST_CASE("correlation matrix structural properties hold for random inputs") {
  detail::Rng rng(7781);
  for (int iter = 0; iter < 25; ++iter) {
    const std::size_t n = 2 + rng.below(12);
    const std::size_t d = 1 + rng.below(4);
    Matrix<double> x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) x(i, k) = rng.uniform01();
    }
    const double nugget = iter % 3 == 0 ? rng.uniform(0.0, 0.1) : 0.0;
    const auto theta = test_helpers::random_theta(d, rng, 0.0, 8.0);
    const auto r = build_corr_matrix(x, params(theta, 1.95, nugget));

    for (std::size_t i = 0; i < n; ++i) {
      CHECK(r.values(i, i) == 1.0 + nugget);
      for (std::size_t j = 0; j < i; ++j) {
        CHECK(r.values(i, j) == r.values(j, i));  // mirrored, so exact
        CHECK(r.values(i, j) > 0.0);
        CHECK(r.values(i, j) <= 1.0);
      }
    }
  }
}

TEST_CASE("increasing any theta component weakly decreases off-diagonal entries") {
  detail::Rng rng(99182);
  const std::size_t n = 8;
  const std::size_t d = 3;
  Matrix<double> x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) x(i, k) = rng.uniform01();
  }
  auto theta = test_helpers::random_theta(d, rng);
  const auto base = build_corr_matrix(x, params(theta));
  for (std::size_t k = 0; k < d; ++k) {
    auto bumped = theta;
    bumped[k] += 1.0;
    const auto more = build_corr_matrix(x, params(bumped));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) CHECK(more.values(i, j) <= base.values(i, j));
    }
  }
}

TEST_CASE("permuting design rows permutes the correlation matrix") {
  detail::Rng rng(5150);
  const std::size_t n = 7;
  const std::size_t d = 2;
  Matrix<double> x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) x(i, k) = rng.uniform01();
  }
  const auto theta = test_helpers::random_theta(d, rng);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);

  Matrix<double> xp(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) xp(i, k) = x(perm[i], k);
  }

  const auto r = build_corr_matrix(x, params(theta));
  const auto rp = build_corr_matrix(xp, params(theta));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) CHECK(rp.values(i, j) == r.values(perm[i], perm[j]));
  }
}

TEST_CASE("corr_vector at a training row equals the matrix row without nugget") {
  detail::Rng rng(424242);
  const std::size_t n = 6;
  const std::size_t d = 3;
  Matrix<double> x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) x(i, k) = rng.uniform01();
  }
  const auto hp = params(test_helpers::random_theta(d, rng), 1.95, 0.05);
  const auto r = build_corr_matrix(x, hp);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = corr_vector<double>(x.row(i), x, hp);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        CHECK(v[j] == r.values(i, j) - hp.nugget);
      } else {
        CHECK(v[j] == r.values(i, j));
      }
    }
  }
}

TEST_CASE("plan-based builds match the stateless path bitwise") {
  detail::Rng rng(31137);
  for (auto n : {5, 23, 64}) {
    const std::size_t d = 1 + rng.below(5);
    Matrix<double> x(n, d);
    for (int i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) x(i, k) = rng.uniform01();
    }
    const auto hp = params(test_helpers::random_theta(d, rng), 1.95, 0.01);

    const auto direct = build_corr_matrix(x, hp);
    CorrelationPlan<double> plan(x, hp.p);
    CorrelationMatrix<double> from_plan;
    const auto theta_s = cast_vector<double>(hp.theta);
    plan.build_into(from_plan, theta_s, hp.nugget);
    CHECK(from_plan.values == direct.values);

    const auto xf = x.cast<float>();
    const auto direct_f = build_corr_matrix(xf, hp);
    CorrelationPlan<float> plan_f(xf, static_cast<float>(hp.p));
    CorrelationMatrix<float> from_plan_f;
    const auto theta_f = cast_vector<float>(hp.theta);
    plan_f.build_into(from_plan_f, theta_f, static_cast<float>(hp.nugget));
    CHECK(from_plan_f.values == direct_f.values);
  }
}

TEST_CASE("parallel builds are bitwise identical to sequential builds") {
  detail::Rng rng(90125);
  const std::size_t n = 150;  // large enough to engage the pool chunking
  const std::size_t d = 3;
  Matrix<double> x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) x(i, k) = rng.uniform01();
  }
  const auto hp = params(test_helpers::random_theta(d, rng));

  const auto serial = build_corr_matrix(x, hp);
  for (unsigned threads : {2u, 5u}) {
    detail::ThreadPool pool(threads);
    const auto parallel = build_corr_matrix(x, hp, &pool);
    CHECK(parallel.values == serial.values);

    CorrelationPlan<double> plan(x, hp.p, &pool);
    CorrelationMatrix<double> from_plan;
    const auto theta_s = cast_vector<double>(hp.theta);
    plan.build_into(from_plan, theta_s, hp.nugget, &pool);
    CHECK(from_plan.values == serial.values);
  }
}

TEST_CASE("invalid hyperparameters are rejected") {
  const Matrix<double> x{{0.0}, {1.0}};
  CHECK_THROWS_AS(build_corr_matrix(x, params({1.0}, 0.0)), ValidationError);
  CHECK_THROWS_AS(build_corr_matrix(x, params({1.0}, 2.5)), ValidationError);
  CHECK_THROWS_AS(build_corr_matrix(x, params({-1.0})), ValidationError);
  CHECK_THROWS_AS(build_corr_matrix(x, params({1.0}, 1.95, -0.1)), ValidationError);
}

TEST_CASE("correlation agrees with the pow-based oracle") {
  detail::Rng rng(777);
  const std::size_t n = 9;
  const std::size_t d = 2;
  Matrix<double> x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) x(i, k) = rng.uniform01();
  }
  const auto theta = test_helpers::random_theta(d, rng);
  const auto r = build_corr_matrix(x, params(theta));
  const auto ref = oracle::corr_matrix(x, theta, 1.95, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) CHECK(rel_diff(r.values(i, j), ref(i, j)) < 1e-12);
  }
}
