// Benchmark CLI: runs the GP-fitting protocol over test simulators and
// aggregates the per-replication CSV into summary and speedup tables.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gpemu/gpemu.hpp"

namespace {

int run_command(const std::string& config_path, bool quiet) {
  const gpemu::BenchConfig cfg = gpemu::parse_bench_config_file(config_path);
  if (cfg.output_path.empty()) {
    std::cerr << "bench run: config has no output_path; rows go to stdout only\n";
  }
  const auto rows = gpemu::run_bench(cfg, quiet ? nullptr : &std::cerr);
  if (cfg.output_path.empty()) {
    std::cout << gpemu::kBenchCsvHeader << "\n";
    for (const auto& row : rows) std::cout << gpemu::format_bench_row(row) << "\n";
  } else {
    std::cerr << "bench run: wrote " << rows.size() << " rows to " << cfg.output_path << "\n";
  }
  return 0;
}

int summarize_command(const std::string& csv_path, const std::string& out_path) {
  const auto rows = gpemu::parse_bench_csv_file(csv_path);
  const auto summary = gpemu::summarize(rows, &std::cerr);
  std::cout << gpemu::format_summary_table(summary);
  const std::string target = out_path.empty() ? csv_path + ".summary.csv" : out_path;
  std::ofstream os(target);
  if (!os) throw gpemu::ConfigError("summarize: cannot open " + target);
  gpemu::write_summary_csv(summary, os);
  std::cerr << "summary csv written to " << target << "\n";
  return 0;
}

int speedup_command(const std::string& csv_path) {
  const auto rows = gpemu::parse_bench_csv_file(csv_path);
  const auto report = gpemu::speedup_report(rows, &std::cerr);
  std::cout << gpemu::format_speedup_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-process emulator benchmark harness"};
  app.require_subcommand(1);

  std::string config_path;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a benchmark sweep from a config file");
  run->add_option("--config", config_path, "Key-value config file")->required();
  run->add_flag("--quiet", quiet, "Suppress per-row progress on stderr");

  std::string summarize_csv;
  std::string summarize_out;
  auto* sum = app.add_subcommand("summarize", "Aggregate a bench CSV into per-size means");
  sum->add_option("csv", summarize_csv, "Bench output CSV")->required();
  sum->add_option("--out", summarize_out, "Summary CSV path (default: <csv>.summary.csv)");

  std::string speedup_csv;
  auto* spd = app.add_subcommand("speedup", "Backend-vs-backend wall-time ratios");
  spd->add_option("csv", speedup_csv, "Bench output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path, quiet);
    if (sum->parsed()) return summarize_command(summarize_csv, summarize_out);
    if (spd->parsed()) return speedup_command(speedup_csv);
  } catch (const gpemu::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
