#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "flowlab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for curvature flows of spacelike graphs"};
  app.require_subcommand(1);

  std::string config, dir, suite_dir;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", config, "Experiment config (.ini)")->required();
  auto* plot = app.add_subcommand("plot", "Write gnuplot tables for a finished run");
  plot->add_option("dir", dir, "Output directory of the run")->required();
  auto* suite = app.add_subcommand("suite", "Run every config in a directory");
  suite->add_option("dir", suite_dir, "Directory of .ini configs")->required();
  suite->add_option("--jobs,-j", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? flowlab::kExitOk : flowlab::kExitConfig;
  }

  if (*run) return flowlab::run_experiment(config, std::cout, std::cerr);
  if (*plot) return flowlab::emit_plotdata(dir, std::cerr);
  return flowlab::run_suite("/proc/self/exe", suite_dir, jobs, std::cout, std::cerr);
}
