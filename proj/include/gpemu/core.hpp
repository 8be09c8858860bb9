#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gpemu/errors.hpp"
#include "gpemu/matrix.hpp"
#include "gpemu/optimizer.hpp"

namespace gpemu {

/// Design points on the unit cube plus the simulator responses observed at
/// them. Immutable after construction; construct through new_dataset so the
/// invariants (n >= 2, d >= 1, coordinates in [0,1], finite entries,
/// matching lengths) always hold.
class Dataset {
 public:
  Dataset() = default;

  std::size_t n() const { return inputs_.rows(); }
  std::size_t d() const { return inputs_.cols(); }
  const Matrix<double>& inputs() const { return inputs_; }
  const std::vector<double>& outputs() const { return outputs_; }

  friend Dataset new_dataset(Matrix<double> inputs, std::vector<double> outputs);

 private:
  Dataset(Matrix<double> inputs, std::vector<double> outputs)
      : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {}

  Matrix<double> inputs_;
  std::vector<double> outputs_;
};

/// Coordinates may stick out of [0,1] by at most this much before
/// new_dataset rejects them.
inline constexpr double kUnitCubeTolerance = 1e-12;

inline Dataset new_dataset(Matrix<double> inputs, std::vector<double> outputs) {
  if (inputs.rows() < 2) throw ValidationError("new_dataset: need at least 2 design points");
  if (inputs.cols() < 1) throw ValidationError("new_dataset: need at least 1 input dimension");
  if (outputs.size() != inputs.rows()) {
    throw ValidationError("new_dataset: dimension mismatch: " + std::to_string(inputs.rows()) +
                          " input rows vs " + std::to_string(outputs.size()) + " outputs");
  }
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    for (std::size_t k = 0; k < inputs.cols(); ++k) {
      const double x = inputs(i, k);
      if (!std::isfinite(x)) throw ValidationError("new_dataset: non-finite input coordinate");
      if (x < -kUnitCubeTolerance || x > 1.0 + kUnitCubeTolerance) {
        throw ValidationError("new_dataset: coordinate " + std::to_string(x) +
                              " outside the unit cube at row " + std::to_string(i));
      }
    }
    if (!std::isfinite(outputs[i])) throw ValidationError("new_dataset: non-finite output");
  }
  return Dataset(std::move(inputs), std::move(outputs));
}

/// Correlation hyperparameters: per-dimension decay rates theta, smoothness
/// exponent p in (0,2], and an optional nugget added to the training
/// diagonal.
struct Hyperparameters {
  std::vector<double> theta;
  double p = 1.95;
  double nugget = 0.0;

  void validate(std::size_t expected_d) const {
    if (theta.size() != expected_d) throw ValidationError("Hyperparameters: theta length does not match input dimension");
    for (double t : theta) {
      if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("Hyperparameters: theta entries must be finite and nonnegative");
    }
    if (!(p > 0.0) || !(p <= 2.0)) throw ValidationError("Hyperparameters: p must be in (0, 2]");
    if (!(nugget >= 0.0) || !std::isfinite(nugget)) throw ValidationError("Hyperparameters: nugget must be finite and nonnegative");
  }
};

enum class Precision { kSingle, kDouble };

inline std::string_view precision_name(Precision p) {
  return p == Precision::kSingle ? "single" : "double";
}

inline Precision parse_precision(std::string_view s) {
  if (s == "single" || s == "float") return Precision::kSingle;
  if (s == "double") return Precision::kDouble;
  throw ConfigError("unknown precision '" + std::string(s) + "' (expected single|double)");
}

/// Everything a fit needs besides the data. Identical config + dataset gives
/// an identical fit; all randomness derives from `seed`.
struct FitConfig {
  Precision precision = Precision::kDouble;
  std::string backend = "parallel";
  GaConfig ga;
  /// Per-dimension (lower, upper) search bounds for theta; when empty, the
  /// default [1e-6, 12] box is replicated across dimensions at fit time.
  std::vector<std::pair<double, double>> theta_bounds;
  std::uint64_t seed = 0;
  double p = 1.95;
  double nugget = 0.0;

  static constexpr double kDefaultThetaLower = 1e-6;
  static constexpr double kDefaultThetaUpper = 12.0;

  std::vector<std::pair<double, double>> bounds_for(std::size_t d) const {
    auto b = theta_bounds;
    if (b.empty()) b.assign(d, {kDefaultThetaLower, kDefaultThetaUpper});
    if (b.size() == 1 && d > 1) b.assign(d, b.front());
    if (b.size() != d) throw ValidationError("FitConfig: theta_bounds length does not match input dimension");
    for (const auto& [lo, hi] : b) {
      if (!(lo > 0.0) || !(lo < hi)) throw ValidationError("FitConfig: theta bounds require 0 < lower < upper");
    }
    return b;
  }
};

// --- Dataset <-> CSV ------------------------------------------------------
//
// Header `x1,...,xd,y`, one row per point, values printed with 17 significant
// digits so a double round-trips exactly.

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

inline double parse_double_token(std::string_view tok, const char* context) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw ValidationError(std::string("csv: bad numeric field '") + std::string(tok) + "' in " + context);
  }
  return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

inline void write_dataset_csv(const Dataset& data, std::ostream& os) {
  std::string line;
  for (std::size_t k = 0; k < data.d(); ++k) {
    line += "x" + std::to_string(k + 1) + ",";
  }
  line += "y\n";
  os << line;
  for (std::size_t i = 0; i < data.n(); ++i) {
    line.clear();
    for (std::size_t k = 0; k < data.d(); ++k) {
      detail::append_double(line, data.inputs()(i, k));
      line += ',';
    }
    detail::append_double(line, data.outputs()[i]);
    line += '\n';
    os << line;
  }
}

inline void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("write_dataset_csv: cannot open " + path);
  write_dataset_csv(data, os);
}

inline Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("csv: empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header.back() != "y") {
    throw ValidationError("csv: expected header x1,...,xd,y");
  }
  const std::size_t d = header.size() - 1;

  std::vector<double> values;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != d + 1) {
      throw ValidationError("csv: row with " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(d + 1));
    }
    for (const auto& f : fields) values.push_back(detail::parse_double_token(f, "dataset row"));
    ++n;
  }

  Matrix<double> inputs(n, d);
  std::vector<double> outputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) inputs(i, k) = values[i * (d + 1) + k];
    outputs[i] = values[i * (d + 1) + d];
  }
  return new_dataset(std::move(inputs), std::move(outputs));
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("read_dataset_csv: cannot open " + path);
  return read_dataset_csv(is);
}

}  // namespace gpemu
