#pragma once

// Sectioned key-value experiment configuration. Every error names the dotted
// field path, e.g. "grid.N".

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowlab/ambient.hpp"
#include "flowlab/curvature.hpp"
#include "flowlab/flow.hpp"
#include "flowlab/grid.hpp"

namespace flowlab {

enum class ExperimentKind {
  FlowRun,
  Stability,
  Foliate,
  Imcf,
  ArwRescaled,
  Transition,
  IdentitySuite,
  DecayCheck,
};

ExperimentKind parse_experiment(const std::string& s);
std::string to_string(ExperimentKind k);

struct InitialSpec {
  double u0 = 0.0;
  double amplitude = 0.0;  // band-limited perturbation, 0 for a coordinate slice
  int kmax = 2;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::FlowRun;
  std::uint64_t seed = 1;
  std::string output_dir = "flowlab_out";

  ModelParams model;
  SpatialGrid grid;
  CurvatureSpec curvature;
  FlowMode mode = FlowMode::Generic;
  ForcingSpec forcing;
  double dt_safety = 0.2;
  double dt_max = 1e-2;
  double fixed_dt = 0.0;
  double t_max = 1.0;
  double tol = 1e-8;
  int snapshot_every = 10;
  InitialSpec initial;

  std::vector<int> identity_levels{64, 128};
  int identity_steps = 8;

  double foliate_eps_step = 1e-3;
  int foliate_leaves = 5;
  bool foliate_bordered = false;

  double decay_tau0 = -1.0;
  double decay_c = 0.0;  // 0 uses n/(γ̃) for ARW models
  int decay_decades = 8;
  double logdet_tau0 = -2.0;
  double logdet_tau1 = -0.5;

  double c3_delta0 = 8e-3;
  int c3_levels = 4;

  // key → value as read, for the hash and the manifest
  std::map<std::string, std::string> raw;
};

// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& cfg);

FlowConfig make_flow_config(const ExperimentConfig& cfg);
GraphState make_initial_state(const ExperimentConfig& cfg);

// Canonical "key = value" lines in sorted order and their FNV-1a hash. The
// output directory is excluded so relocating a run keeps its hash.
std::string canonical_text(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hex64(std::uint64_t v);

}  // namespace flowlab
