#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gpemu/detail/rng.hpp"
#include "gpemu/errors.hpp"

namespace gpemu {

/// Real-coded GA settings. population * generations is the exact number of
/// objective evaluations a run performs; the defaults give 2000.
struct GaConfig {
  int population = 100;
  int generations = 20;
  double crossover_rate = 0.9;
  double mutation_sigma = 0.15;
  /// Per-coordinate mutation probability; 0 means "use 1/d".
  double mutation_prob = 0.0;
  int elitism = 1;
  std::uint64_t seed = 0;

  int budget() const { return population * generations; }

  void validate() const {
    if (population <= 0 || generations <= 0) throw ValidationError("GaConfig: population and generations must be positive");
    if (crossover_rate < 0.0 || crossover_rate > 1.0) throw ValidationError("GaConfig: crossover_rate must be in [0,1]");
    if (!(mutation_sigma > 0.0)) throw ValidationError("GaConfig: mutation_sigma must be positive");
    if (mutation_prob < 0.0 || mutation_prob > 1.0) throw ValidationError("GaConfig: mutation_prob must be in [0,1]");
    if (elitism < 0 || elitism >= population) throw ValidationError("GaConfig: elitism must be in [0, population)");
  }
};

struct GaGenerationRecord {
  double best_value;
  std::vector<double> best_point;
  std::uint64_t evaluations;  // cumulative count after this generation
};

/// Per-generation history of a GA run. With elitism >= 1 the best value is
/// non-increasing across generations.
struct GaTrace {
  std::vector<GaGenerationRecord> generations;
};

struct GaResult {
  std::vector<double> best_point;
  double best_value = std::numeric_limits<double>::infinity();
  GaTrace trace;
};

namespace detail {

/// Plain Latin hypercube sample used to seed the GA population.
inline std::vector<std::vector<double>> lhs_population(
    std::span<const std::pair<double, double>> bounds, int count, Rng& rng) {
  const std::size_t d = bounds.size();
  std::vector<std::vector<double>> pop(count, std::vector<double>(d));
  std::vector<int> perm(count);
  for (std::size_t k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = count - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
    const double width = bounds[k].second - bounds[k].first;
    for (int i = 0; i < count; ++i) {
      const double u = (perm[i] + rng.uniform01()) / count;
      pop[i][k] = bounds[k].first + width * u;
    }
  }
  return pop;
}

}  // namespace detail

/// Minimizes a black-box objective over a bounded box with a real-coded GA.
///
/// Contract: the objective is called exactly population * generations times
/// (the initial population counts toward that budget, and elites are
/// re-evaluated each generation so the count stays exact); every candidate
/// lies inside the bounds; +inf objective values are legal fitnesses and rank
/// worst. The run is deterministic given cfg.seed: variation draws come from
/// per-(generation, slot) streams, so evaluating a population in parallel
/// cannot change the sequence of candidates.
template <typename Objective>
GaResult ga_minimize(Objective&& objective,
                     std::span<const std::pair<double, double>> bounds,
                     const GaConfig& cfg) {
  cfg.validate();
  const std::size_t d = bounds.size();
  if (d == 0) throw ValidationError("ga_minimize: empty bounds");
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ValidationError("ga_minimize: degenerate bounds");
    }
  }

  const int pop_size = cfg.population;
  const double mut_prob = cfg.mutation_prob > 0.0 ? cfg.mutation_prob : 1.0 / static_cast<double>(d);

  detail::Rng init_rng(detail::derive_seed(cfg.seed, 0x1e17u));
  auto population = detail::lhs_population(bounds, pop_size, init_rng);
  std::vector<double> fitness(pop_size);

  GaResult result;
  std::uint64_t evals = 0;

  auto evaluate_population = [&] {
    for (int i = 0; i < pop_size; ++i) {
      fitness[i] = objective(std::span<const double>(population[i]));
      ++evals;
    }
  };

  // Index of the best individual; ties resolve to the lowest slot so every
  // consumer of "the best" agrees on one winner.
  auto best_index = [&] {
    int best = 0;
    for (int i = 1; i < pop_size; ++i) {
      if (fitness[i] < fitness[best]) best = i;
    }
    return best;
  };

  auto record_generation = [&] {
    const int b = best_index();
    if (fitness[b] < result.best_value) {
      result.best_value = fitness[b];
      result.best_point = population[b];
    }
    // The trace holds each generation's own best, not the running incumbent.
    result.trace.generations.push_back({fitness[b], population[b], evals});
  };

  evaluate_population();
  record_generation();

  for (int gen = 1; gen < cfg.generations; ++gen) {
    std::vector<std::vector<double>> next(pop_size);
    // Elites first, in fitness order (stable by slot on ties).
    std::vector<int> order(pop_size);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fitness[a] < fitness[b]; });
    for (int e = 0; e < cfg.elitism; ++e) next[e] = population[order[e]];

    for (int slot = cfg.elitism; slot < pop_size; ++slot) {
      detail::Rng rng(detail::derive_seed(cfg.seed, static_cast<std::uint64_t>(gen),
                                          static_cast<std::uint64_t>(slot)));
      auto tournament = [&]() -> const std::vector<double>& {
        const auto a = static_cast<int>(rng.below(pop_size));
        const auto b = static_cast<int>(rng.below(pop_size));
        const bool a_wins = fitness[a] < fitness[b] || (fitness[a] == fitness[b] && a <= b);
        return population[a_wins ? a : b];
      };
      const auto& parent_a = tournament();
      const auto& parent_b = tournament();

      std::vector<double> child(d);
      if (rng.uniform01() < cfg.crossover_rate) {
        for (std::size_t k = 0; k < d; ++k) {
          child[k] = rng.uniform01() < 0.5 ? parent_a[k] : parent_b[k];
        }
      } else {
        child = parent_a;
      }
      for (std::size_t k = 0; k < d; ++k) {
        if (rng.uniform01() < mut_prob) child[k] += cfg.mutation_sigma * rng.normal();
        child[k] = std::clamp(child[k], bounds[k].first, bounds[k].second);
      }
      next[slot] = std::move(child);
    }
    population = std::move(next);
    evaluate_population();
    record_generation();
  }

  return result;
}

}  // namespace gpemu
