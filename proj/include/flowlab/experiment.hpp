#pragma once

// Experiment runner behind the command-line tool. Artifacts per run:
// run.csv, summary.json, manifest.json; `plot` derives gnuplot tables.
//
// Exit codes: 0 success, 1 numerical or experimental failure, 2 usage or
// configuration error.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowlab/config.hpp"

namespace flowlab {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentResult {
  bool success = false;
  std::string verdict;
  nlohmann::json summary;  // experiment-specific fields
  Table series;            // becomes run.csv
};

ExperimentResult execute(const ExperimentConfig& cfg);

// FLOWLAB_OUTPUT overrides cfg.output_dir.
std::string resolve_output_dir(const ExperimentConfig& cfg);

void write_csv(const std::string& path, const Table& t);
Table read_csv(const std::string& path);
void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& r, const std::string& dir);

// Full pipeline for one config file; diagnostics go to `err`.
int run_experiment(const std::string& config_path, std::ostream& out, std::ostream& err);

// One whitespace-separated table per monitored series of run.csv.
int emit_plotdata(const std::string& output_dir, std::ostream& err);

// Runs every *.ini in `dir` through `exe run`, at most `jobs` at a time.
// Returns the largest child exit code.
int run_suite(const std::string& exe, const std::string& dir, int jobs, std::ostream& out,
              std::ostream& err);

}  // namespace flowlab
