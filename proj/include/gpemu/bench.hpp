#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "gpemu/backend.hpp"
#include "gpemu/core.hpp"
#include "gpemu/experiment.hpp"
#include "gpemu/likelihood.hpp"
#include "gpemu/predictor.hpp"

namespace gpemu {

/// One benchmark sweep: a test function, a list of design sizes, replicated
/// fits per backend, everything derived from one base seed.
struct BenchConfig {
  TestFunction function = TestFunction::kGoldsteinPriceLog;
  std::vector<std::size_t> sizes;
  int replications = 10;
  std::vector<std::string> backends = {"parallel"};
  Precision precision = Precision::kDouble;
  std::uint64_t seed = 0;
  std::string output_path;

  int ga_population = 100;
  int ga_generations = 20;
  std::size_t test_points = 1000;
  std::size_t exchange_budget = 10000;
  double theta_lower = 1e-6;
  double theta_upper = 12.0;
  /// Post-GA polish: 20 extra double-precision objective evaluations via
  /// coordinate-wise golden-section around the GA optimum. Off by default.
  bool refine = false;
  /// Desk-scale guard; sizes above 1024 need an explicit opt-in.
  bool allow_large = false;
  /// Run replications of one size concurrently. Timing columns become
  /// unreliable; non-timing output is unchanged and rows are still written
  /// in canonical order.
  bool concurrent_replications = false;
  unsigned threads = 0;

  void validate() const {
    const std::size_t d = test_function_dim(function);
    if (sizes.empty()) throw ConfigError("bench: sizes must be non-empty");
    for (std::size_t n : sizes) {
      if (n < d + 2) {
        throw ConfigError("bench: n = " + std::to_string(n) + " is below d + 2 = " + std::to_string(d + 2));
      }
      if (n > 1024 && !allow_large) {
        throw ConfigError("bench: n = " + std::to_string(n) + " exceeds the desk-scale cap 1024; set allow_large = 1");
      }
    }
    if (replications < 1) throw ConfigError("bench: replications must be positive");
    if (backends.empty()) throw ConfigError("bench: backends must be non-empty");
    for (const auto& b : backends) {
      if (b != "reference" && b != "parallel" && b != "accelerated") {
        throw ConfigError("bench: unknown backend '" + b + "'");
      }
    }
    if (ga_population < 1 || ga_generations < 1) throw ConfigError("bench: GA population and generations must be positive");
    if (test_points < 1) throw ConfigError("bench: test_points must be positive");
    if (!(theta_lower > 0.0) || !(theta_lower < theta_upper)) {
      throw ConfigError("bench: require 0 < theta_lower < theta_upper");
    }
  }
};

/// One (function, n, replication, backend) fit in a sweep.
struct BenchReportRow {
  std::string function;
  std::string backend;
  std::string precision;
  std::size_t n = 0;
  int replication = 0;
  double wall_time_seconds = 0.0;
  double neg2_log_lik = 0.0;
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  double sspe = 0.0;
  double jitter_max = 0.0;
  std::uint64_t eval_count = 0;
  bool failed = false;
};

inline constexpr std::string_view kBenchCsvHeader =
    "function,backend,precision,n,replication,wall_time_seconds,neg2_log_lik,mu_hat,sigma2_hat,"
    "sspe,jitter_max,eval_count";

// --- config file ------------------------------------------------------------
//
// Plain key-value text: one `key = value` per line, '#' starts a comment.
// Lists (sizes, backends) are comma separated.

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto piece = trim(value.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!piece.empty()) items.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("bench config: bad boolean for " + key + ": '" + v + "'");
}

template <typename T>
inline T parse_number(const std::string& v, const std::string& key) {
  try {
    if constexpr (std::is_floating_point_v<T>) {
      return static_cast<T>(std::stod(v));
    } else if constexpr (std::is_unsigned_v<T>) {
      return static_cast<T>(std::stoull(v));
    } else {
      return static_cast<T>(std::stoll(v));
    }
  } catch (const std::exception&) {
    throw ConfigError("bench config: bad numeric value for " + key + ": '" + v + "'");
  }
}

}  // namespace detail

inline BenchConfig parse_bench_config(std::istream& is) {
  BenchConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("bench config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key == "function") {
      cfg.function = parse_test_function(value);
    } else if (key == "sizes") {
      cfg.sizes.clear();
      for (const auto& item : detail::split_list(value)) {
        cfg.sizes.push_back(detail::parse_number<std::size_t>(item, key));
      }
    } else if (key == "replications") {
      cfg.replications = detail::parse_number<int>(value, key);
    } else if (key == "backends") {
      cfg.backends = detail::split_list(value);
    } else if (key == "precision") {
      cfg.precision = parse_precision(value);
    } else if (key == "seed") {
      cfg.seed = detail::parse_number<std::uint64_t>(value, key);
    } else if (key == "output_path" || key == "output") {
      cfg.output_path = value;
    } else if (key == "ga_population") {
      cfg.ga_population = detail::parse_number<int>(value, key);
    } else if (key == "ga_generations") {
      cfg.ga_generations = detail::parse_number<int>(value, key);
    } else if (key == "test_points") {
      cfg.test_points = detail::parse_number<std::size_t>(value, key);
    } else if (key == "exchange_budget") {
      cfg.exchange_budget = detail::parse_number<std::size_t>(value, key);
    } else if (key == "theta_lower") {
      cfg.theta_lower = detail::parse_number<double>(value, key);
    } else if (key == "theta_upper") {
      cfg.theta_upper = detail::parse_number<double>(value, key);
    } else if (key == "refine") {
      cfg.refine = detail::parse_bool(value, key);
    } else if (key == "allow_large") {
      cfg.allow_large = detail::parse_bool(value, key);
    } else if (key == "concurrent_replications") {
      cfg.concurrent_replications = detail::parse_bool(value, key);
    } else if (key == "threads") {
      cfg.threads = detail::parse_number<unsigned>(value, key);
    } else {
      throw ConfigError("bench config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline BenchConfig parse_bench_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("bench config: cannot open " + path);
  return parse_bench_config(is);
}

// --- row serialization --------------------------------------------------------

namespace detail {

inline void append_field(std::string& out, double v) {
  append_double(out, v);
  out += ',';
}

}  // namespace detail

inline std::string format_bench_row(const BenchReportRow& row) {
  std::string out;
  out += row.function;
  out += ',';
  out += row.backend;
  out += ',';
  out += row.precision;
  out += ',';
  out += std::to_string(row.n);
  out += ',';
  out += std::to_string(row.replication);
  out += ',';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  char wall[40];
  std::snprintf(wall, sizeof(wall), "%.6f", row.wall_time_seconds);
  out += wall;
  out += ',';
  detail::append_field(out, row.failed ? nan : row.neg2_log_lik);
  detail::append_field(out, row.failed ? nan : row.mu_hat);
  detail::append_field(out, row.failed ? nan : row.sigma2_hat);
  detail::append_field(out, row.failed ? nan : row.sspe);
  detail::append_field(out, row.failed ? nan : row.jitter_max);
  out += std::to_string(row.eval_count);
  return out;
}

inline std::vector<BenchReportRow> parse_bench_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("bench csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kBenchCsvHeader) throw ValidationError("bench csv: unexpected header");
  std::vector<BenchReportRow> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 12) throw ValidationError("bench csv: bad row '" + line + "'");
    BenchReportRow row;
    row.function = std::string(f[0]);
    row.backend = std::string(f[1]);
    row.precision = std::string(f[2]);
    row.n = detail::parse_number<std::size_t>(std::string(f[3]), "n");
    row.replication = detail::parse_number<int>(std::string(f[4]), "replication");
    auto num = [&](std::string_view tok) {
      if (tok == "nan" || tok == "-nan") return std::numeric_limits<double>::quiet_NaN();
      return detail::parse_double_token(tok, "bench row");
    };
    row.wall_time_seconds = num(f[5]);
    row.neg2_log_lik = num(f[6]);
    row.mu_hat = num(f[7]);
    row.sigma2_hat = num(f[8]);
    row.sspe = num(f[9]);
    row.jitter_max = num(f[10]);
    row.eval_count = detail::parse_number<std::uint64_t>(std::string(f[11]), "eval_count");
    row.failed = std::isnan(row.neg2_log_lik);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<BenchReportRow> parse_bench_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("bench csv: cannot open " + path);
  return parse_bench_csv(is);
}

// --- the sweep ----------------------------------------------------------------

namespace detail {

/// Coordinate-wise golden-section polish of the profile objective around the
/// fitted optimum, in double precision regardless of the run precision. Uses
/// exactly `budget` extra objective evaluations.
template <typename Scalar>
void refine_fit(FitResult<Scalar>& fit, const Dataset& data, const FitConfig& cfg,
                Backend<Scalar>& backend, int budget, std::uint64_t* extra_evals) {
  const std::size_t d = data.d();
  auto dbl_backend = make_backend<double>(cfg.backend, 1);
  ProfileEvaluator<double> polish(data, cfg.p, cfg.nugget, *dbl_backend);

  const auto bounds = cfg.bounds_for(d);
  std::vector<double> best_genes(d);
  for (std::size_t k = 0; k < d; ++k) best_genes[k] = std::log10(fit.model.params.theta[k]);
  double best_value = fit.model.neg2_log_lik;

  std::vector<double> theta(d);
  int used = 0;
  auto eval_genes = [&](const std::vector<double>& g) {
    for (std::size_t k = 0; k < d; ++k) theta[k] = std::pow(10.0, g[k]);
    ++used;
    const double v = polish.eval(theta).neg2_log_lik;
    if (v < best_value) {
      best_value = v;
      best_genes = g;
    }
    return v;
  };

  constexpr double kInvPhi = 0.6180339887498949;
  constexpr double kHalfWidth = 0.25;  // log10 units around the incumbent
  std::vector<double> g(d);
  std::size_t k = 0;
  while (used < budget) {
    g = best_genes;
    double lo = std::max(std::log10(bounds[k].first), best_genes[k] - kHalfWidth);
    double hi = std::min(std::log10(bounds[k].second), best_genes[k] + kHalfWidth);
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    g[k] = x1;
    double f1 = eval_genes(g);
    if (used >= budget) break;
    g[k] = x2;
    double f2 = eval_genes(g);
    for (int step = 0; step < 2 && used < budget; ++step) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - kInvPhi * (hi - lo);
        g[k] = x1;
        f1 = eval_genes(g);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + kInvPhi * (hi - lo);
        g[k] = x2;
        f2 = eval_genes(g);
      }
    }
    k = (k + 1) % d;
  }
  if (extra_evals) *extra_evals += static_cast<std::uint64_t>(used);

  // Rebuild the model at the refined theta in the run's own precision.
  if (best_value < fit.model.neg2_log_lik) {
    ProfileEvaluator<Scalar> evaluator(data, cfg.p, cfg.nugget, backend);
    for (std::size_t k2 = 0; k2 < d; ++k2) theta[k2] = std::pow(10.0, best_genes[k2]);
    const ProfileEval ev = evaluator.eval(theta);
    if (extra_evals) *extra_evals += 1;
    if (std::isfinite(ev.neg2_log_lik) && ev.neg2_log_lik < fit.model.neg2_log_lik) {
      CorrelationFactor<Scalar> factor = evaluator.last_factor();
      const auto& y = evaluator.outputs();
      std::vector<Scalar> rhs(data.n());
      for (std::size_t i = 0; i < data.n(); ++i) rhs[i] = y[i] - static_cast<Scalar>(ev.mu_hat);
      fit.model.alpha = backend.solve_full(factor, rhs);
      fit.model.factor = std::move(factor);
      fit.model.params.theta = ev.theta;
      fit.model.mu_hat = ev.mu_hat;
      fit.model.sigma2_hat = ev.sigma2_hat;
      fit.model.neg2_log_lik = ev.neg2_log_lik;
      fit.jitter_max = std::max(fit.jitter_max, evaluator.jitter_max());
    }
  }
}

template <typename Scalar>
BenchReportRow run_bench_cell(const BenchConfig& cfg, const Dataset& data,
                              const Matrix<double>& test_inputs, std::span<const double> truth,
                              const std::string& backend_id, std::size_t n, int rep) {
  BenchReportRow row;
  row.function = std::string(test_function_name(cfg.function));
  row.backend = backend_id;
  row.precision = std::string(precision_name(cfg.precision));
  row.n = n;
  row.replication = rep;

  FitConfig fc;
  fc.precision = cfg.precision;
  fc.backend = backend_id;
  fc.ga.population = cfg.ga_population;
  fc.ga.generations = cfg.ga_generations;
  fc.theta_bounds.assign(data.d(), {cfg.theta_lower, cfg.theta_upper});
  // The fit seed depends on (base seed, n, replication) but not the backend,
  // so every backend walks the identical GA trajectory on identical data.
  fc.seed = derive_seed(cfg.seed, 0xf17ull, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep));
  fc.p = 1.95;

  row.eval_count = static_cast<std::uint64_t>(fc.ga.budget());

  try {
    auto backend = make_backend<Scalar>(backend_id, cfg.threads);
    const auto t0 = std::chrono::steady_clock::now();
    FitResult<Scalar> fit = fit_gp_detailed(data, fc, *backend);
    if (cfg.refine) {
      std::uint64_t extra = 0;
      refine_fit(fit, data, fc, *backend, 20, &extra);
      row.eval_count += extra;
    }
    const auto predictions = predict(fit.model, test_inputs, backend->pool());
    const auto t1 = std::chrono::steady_clock::now();
    row.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();
    row.neg2_log_lik = fit.model.neg2_log_lik;
    row.mu_hat = fit.model.mu_hat;
    row.sigma2_hat = fit.model.sigma2_hat;
    row.sspe = sspe(predictions, truth);
    row.jitter_max = fit.jitter_max;
  } catch (const Error& e) {
    row.failed = true;
    std::cerr << "bench: fit failed (" << row.function << ", n=" << n << ", rep=" << rep
              << ", backend=" << backend_id << "): " << e.what() << "\n";
  }
  return row;
}

}  // namespace detail

/// Runs the full sweep of cfg: for every (n, replication) generate a fresh
/// maximin LHD design seeded by (base seed, n, replication), evaluate the
/// simulator, fit once per backend on identical data, predict on the shared
/// per-replication test set, and record a row. Rows are appended to
/// cfg.output_path (when set) as they complete, so partial runs are
/// recoverable. Timing covers fit + prediction.
inline std::vector<BenchReportRow> run_bench(const BenchConfig& cfg, std::ostream* progress = nullptr) {
  cfg.validate();
  const std::size_t d = test_function_dim(cfg.function);

  std::ofstream out;
  if (!cfg.output_path.empty()) {
    out.open(cfg.output_path);
    if (!out) throw ConfigError("bench: cannot open output file " + cfg.output_path);
    out << kBenchCsvHeader << "\n" << std::flush;
  }

  // Test sets are fixed per replication (shared across sizes and backends).
  std::map<int, std::pair<Matrix<double>, std::vector<double>>> test_sets;
  auto test_set = [&](int rep) -> const std::pair<Matrix<double>, std::vector<double>>& {
    auto it = test_sets.find(rep);
    if (it == test_sets.end()) {
      DesignSpec spec{cfg.test_points, d,
                      detail::derive_seed(cfg.seed, 0x7e57ull, static_cast<std::uint64_t>(rep)),
                      cfg.exchange_budget};
      Matrix<double> x = maximin_lhd(spec);
      std::vector<double> y = evaluate_test_function_rows(cfg.function, x);
      it = test_sets.emplace(rep, std::make_pair(std::move(x), std::move(y))).first;
    }
    return it->second;
  };

  std::vector<BenchReportRow> rows;
  auto emit = [&](BenchReportRow row) {
    if (out.is_open()) out << format_bench_row(row) << "\n" << std::flush;
    if (progress) {
      *progress << row.function << " n=" << row.n << " rep=" << row.replication << " backend=" << row.backend
                << (row.failed ? " FAILED" : "") << " time=" << row.wall_time_seconds
                << "s sspe=" << row.sspe << "\n";
    }
    rows.push_back(std::move(row));
  };

  auto run_replication = [&](std::size_t n, int rep) {
    DesignSpec spec{n, d, detail::derive_seed(cfg.seed, 0xde51ull, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)),
                    cfg.exchange_budget};
    Matrix<double> design = maximin_lhd(spec);
    std::vector<double> y = evaluate_test_function_rows(cfg.function, design);
    Dataset data = new_dataset(std::move(design), std::move(y));
    const auto& [test_inputs, truth] = test_set(rep);

    std::vector<BenchReportRow> cell_rows;
    for (const auto& backend_id : cfg.backends) {
      if (cfg.precision == Precision::kSingle) {
        cell_rows.push_back(detail::run_bench_cell<float>(cfg, data, test_inputs, truth, backend_id, n, rep));
      } else {
        cell_rows.push_back(detail::run_bench_cell<double>(cfg, data, test_inputs, truth, backend_id, n, rep));
      }
    }
    return cell_rows;
  };

  for (std::size_t n : cfg.sizes) {
    if (!cfg.concurrent_replications) {
      for (int rep = 1; rep <= cfg.replications; ++rep) {
        for (auto& row : run_replication(n, rep)) emit(std::move(row));
      }
    } else {
      // Build test sets up front: the cache is not synchronized.
      for (int rep = 1; rep <= cfg.replications; ++rep) test_set(rep);
      std::vector<std::vector<BenchReportRow>> per_rep(cfg.replications);
      std::vector<std::thread> threads;
      threads.reserve(cfg.replications);
      for (int rep = 1; rep <= cfg.replications; ++rep) {
        threads.emplace_back([&, rep] { per_rep[rep - 1] = run_replication(n, rep); });
      }
      for (auto& t : threads) t.join();
      for (auto& cell : per_rep) {
        for (auto& row : cell) emit(std::move(row));
      }
    }
  }
  return rows;
}

// --- aggregation ----------------------------------------------------------------

struct BenchSummaryRow {
  std::string function;
  std::string backend;
  std::string precision;
  std::size_t n = 0;
  int count = 0;
  double wall_time_seconds = 0.0;
  double neg2_log_lik = 0.0;
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  double sspe = 0.0;
  double jitter_max = 0.0;
  double eval_count = 0.0;
};

/// Per-(function, backend, precision, n) means of every numeric column.
/// Failed rows are skipped with a warning.
inline std::vector<BenchSummaryRow> summarize(const std::vector<BenchReportRow>& rows,
                                              std::ostream* warnings = nullptr) {
  if (rows.empty()) throw ValidationError("summarize: no rows");
  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, BenchSummaryRow> groups;
  for (const auto& row : rows) {
    if (row.failed) {
      if (warnings) {
        *warnings << "summarize: skipping failed row (" << row.function << ", n=" << row.n
                  << ", rep=" << row.replication << ", backend=" << row.backend << ")\n";
      }
      continue;
    }
    auto& g = groups[{row.function, row.backend, row.precision, row.n}];
    if (g.count == 0) {
      g.function = row.function;
      g.backend = row.backend;
      g.precision = row.precision;
      g.n = row.n;
    }
    g.count += 1;
    g.wall_time_seconds += row.wall_time_seconds;
    g.neg2_log_lik += row.neg2_log_lik;
    g.mu_hat += row.mu_hat;
    g.sigma2_hat += row.sigma2_hat;
    g.sspe += row.sspe;
    g.jitter_max += row.jitter_max;
    g.eval_count += static_cast<double>(row.eval_count);
  }
  std::vector<BenchSummaryRow> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) {
    const double c = g.count;
    g.wall_time_seconds /= c;
    g.neg2_log_lik /= c;
    g.mu_hat /= c;
    g.sigma2_hat /= c;
    g.sspe /= c;
    g.jitter_max /= c;
    g.eval_count /= c;
    out.push_back(g);
  }
  return out;
}

inline void write_summary_csv(const std::vector<BenchSummaryRow>& summary, std::ostream& os) {
  os << "function,backend,precision,n,replications,wall_time_seconds,neg2_log_lik,mu_hat,"
        "sigma2_hat,sspe,jitter_max,eval_count\n";
  for (const auto& s : summary) {
    std::string line = s.function + ',' + s.backend + ',' + s.precision + ',' + std::to_string(s.n) +
                       ',' + std::to_string(s.count) + ',';
    detail::append_field(line, s.wall_time_seconds);
    detail::append_field(line, s.neg2_log_lik);
    detail::append_field(line, s.mu_hat);
    detail::append_field(line, s.sigma2_hat);
    detail::append_field(line, s.sspe);
    detail::append_field(line, s.jitter_max);
    detail::append_double(line, s.eval_count);
    os << line << "\n";
  }
}

/// Plain-text table per (function, backend, precision) block, columns laid
/// out like the published result tables.
inline std::string format_summary_table(const std::vector<BenchSummaryRow>& summary) {
  std::ostringstream os;
  std::string current_block;
  for (const auto& s : summary) {
    const std::string block = s.function + " / " + s.backend + " / " + s.precision;
    if (block != current_block) {
      if (!current_block.empty()) os << "\n";
      current_block = block;
      os << block << " (means over " << s.count << " replications)\n";
      char header[160];
      std::snprintf(header, sizeof(header), "%8s %12s %14s %10s %12s %14s\n", "n", "Time(sec)",
                    "-2logL", "mu_hat", "sigma2_z", "SSPE");
      os << header;
    }
    char line[160];
    std::snprintf(line, sizeof(line), "%8zu %12.2f %14.2f %10.4f %12.4f %14.4f\n", s.n,
                  s.wall_time_seconds, s.neg2_log_lik, s.mu_hat, s.sigma2_hat, s.sspe);
    os << line;
  }
  return os.str();
}

struct SpeedupRow {
  std::string function;
  std::string precision;
  std::size_t n = 0;
  std::string baseline;
  std::string backend;
  double ratio = 0.0;  // baseline mean wall time / backend mean wall time
};

/// Wall-time ratios per (function, precision, n) cell with the reference
/// backend in the numerator. Cells missing either side are skipped with a
/// warning.
inline std::vector<SpeedupRow> speedup_report(const std::vector<BenchReportRow>& rows,
                                              std::ostream* warnings = nullptr) {
  std::map<std::tuple<std::string, std::string, std::size_t>, std::map<std::string, std::pair<double, int>>> cells;
  for (const auto& row : rows) {
    if (row.failed) continue;
    auto& acc = cells[{row.function, row.precision, row.n}][row.backend];
    acc.first += row.wall_time_seconds;
    acc.second += 1;
  }
  std::vector<SpeedupRow> out;
  for (const auto& [key, backends] : cells) {
    const auto& [function, precision, n] = key;
    std::string baseline = "reference";
    if (backends.find(baseline) == backends.end()) {
      baseline = backends.begin()->first;
      if (warnings) {
        *warnings << "speedup: no reference backend for (" << function << ", n=" << n
                  << "); using '" << baseline << "' as baseline\n";
      }
    }
    if (backends.size() < 2 && backends.find(baseline) == backends.end()) continue;
    const auto& base = backends.at(baseline);
    const double base_mean = base.first / base.second;
    for (const auto& [backend, acc] : backends) {
      const double mean = acc.first / acc.second;
      if (!(mean > 0.0)) {
        if (warnings) *warnings << "speedup: skipping zero-time cell (" << function << ", n=" << n << ")\n";
        continue;
      }
      out.push_back({function, precision, n, baseline, backend, base_mean / mean});
    }
  }
  return out;
}

inline std::string format_speedup_table(const std::vector<SpeedupRow>& rows) {
  std::ostringstream os;
  char header[160];
  std::snprintf(header, sizeof(header), "%-22s %-8s %8s %-12s %-12s %10s\n", "function", "precision",
                "n", "baseline", "backend", "speedup");
  os << header;
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-22s %-8s %8zu %-12s %-12s %10.3f\n", r.function.c_str(),
                  r.precision.c_str(), r.n, r.baseline.c_str(), r.backend.c_str(), r.ratio);
    os << line;
  }
  return os.str();
}

}  // namespace gpemu
