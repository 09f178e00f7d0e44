#pragma once

// Big-crunch experiments on ARW models: rescaled inverse mean curvature
// flow, its transition across the singularity, and the CMC time function.
//
// ũ = u e^{γt}, with γ̃ = (n + ω - 2)/2 and γ = γ̃/n read from ARWProfile.

#include <array>
#include <string>
#include <vector>

#include "flowlab/ambient.hpp"
#include "flowlab/flow.hpp"
#include "flowlab/hypersurface.hpp"

namespace flowlab {

struct RescaledState {
  double t = 0.0;
  Field u_tilde;
  std::vector<std::array<double, 9>> g_rescaled;  // e^{2t/n} ğ_ij
  Field umbilicity;      // H̆^{-1} |h̆^j_i - (H̆/n) δ^j_i|
  Field umbilicity_raw;  // |h̆^j_i - (H̆/n) δ^j_i|
};

struct RescaledOptions {
  double dt_max = 1e-2;
  double fixed_dt = 0.0;
  double dt_safety = 0.2;
  int snapshot_every = 10;
};

struct RescaledSeries {
  FlowRun run;
  ARWProfile profile;
  std::vector<RescaledState> states;
  double c1 = 0.0;  // -c2 ≤ ũ ≤ -c1 over the run
  double c2 = 0.0;
  double drift_last_quartile = 0.0;  // max sup|ũ(t) - ũ(t_end)| over the final quartile
  bool late_divergence = false;      // ũ increments grew over the final quartile
};

// Throws ConfigError for non-ARW models and DomainError when H̆ ≤ 0 initially.
RescaledSeries run_rescaled_imcf(const ModelPtr& model, const GraphState& initial,
                                 double t_max, const RescaledOptions& opts = {});

RescaledState rescaled_state(const AmbientModel& model, const GraphState& state);

struct MetricLimitReport {
  double limit_error = 0.0;  // max relative error vs the target, terminal state
  double anisotropy = 0.0;   // max |g_12| + |g_11 - g_22| relative, terminal state
  std::vector<std::array<double, 9>> target;
  std::vector<double> errors;  // per state
};

// Target (γ̃m)^{1/γ̃} (-ũ)^{2/γ̃} σ̄_ij with σ̄ the x⁰ → 0 limit of σ_ij.
MetricLimitReport check_rescaled_metric_limit(const RescaledSeries& series,
                                              const AmbientModel& model);

enum class UmbilicityVerdict { Decaying, Degenerate, TooShort };
std::string to_string(UmbilicityVerdict v);

struct UmbilicityReport {
  UmbilicityVerdict verdict = UmbilicityVerdict::TooShort;
  double rate = 0.0;           // fitted decay rate of sup H̆^{-1}|h̆ - H̆/n δ|
  double raw_rate = 0.0;       // same for the raw measure
  double predicted_rate = 0.0; // 2γ
  double improved_rate = 0.0;  // (n + ω - 4)/(2n), NaN unless positive
};

// Log-linear fit over the last half of the run.
UmbilicityReport check_umbilicity_decay(const RescaledSeries& series);

struct TransitionFlow {
  double gamma = 0.0;
  std::vector<double> s;             // strictly increasing, straddles 0
  std::vector<double> t;             // flow time of each node
  std::vector<Field> y0;             // x⁰ component, odd across s = 0
  SpatialGrid grid;                  // spatial components are the chart points
  std::size_t crossing = 0;          // first index with s > 0
  double dt = 0.0;                   // smallest flow-time spacing of the nodes
};

// s = -γ^{-1} e^{-γt} on the original branch and its reflection x̂⁰ = -x⁰
// for s > 0. Throws ConstructionError if the flow time does not increase.
TransitionFlow build_transition_flow(const RescaledSeries& series);

double s_of_t(double gamma, double t, int branch);  // branch -1 or +1
double t_of_s(double gamma, double s);

enum class OrderVerdict { Supported, Unsupported, Inconclusive };
std::string to_string(OrderVerdict v);

struct C3Options {
  double delta0 = 8e-3;
  int levels = 4;   // δ_j = δ0 2^{-j}
  int degree = 5;
  double dt = 0.0;  // resolution scale of the threshold 10 Δt^{4-k}; 0 reads the run
};

struct C3Report {
  int order_supported = 0;
  std::array<OrderVerdict, 5> verdicts{};  // index k = 1..4
  std::array<double, 5> threshold{};
  // gaps[k][j]: extrapolated |D^k y(0+) - D^k y(0-)|, max over chart points
  std::array<std::vector<double>, 5> gaps;
  double odd_symmetry_error = 0.0;  // max |y⁰(-s) + y⁰(s)| over mirrored nodes
};

C3Report c3_probe(const TransitionFlow& tf, const C3Options& opts = {});

struct CmcAsymptotics {
  std::vector<double> phi;      // slice heights, increasing toward 0
  std::vector<double> tau;      // slice mean curvatures
  std::vector<double> product;  // τ(-φ)^{1+1/γ̃}
  double constant = 0.0;        // last product
  double drift_last_decade = 0.0;  // max relative deviation over the last decade of φ
  double homogeneity_ratio = 1.0;  // max_x,y φ(τ,x)/φ(τ,y)
  double ds_dphi_min = 0.0;     // s = -τ^{-q}, q = γ̃/(1+γ̃)
  double ds_dphi_max = 0.0;
};

// Coordinate slices of a homogeneous ARW model on φ_k = φ0 10^{-k/per_decade}.
CmcAsymptotics cmc_foliation_asymptotics(const AmbientModel& model, double phi0 = -1.0,
                                         int decades = 6, int per_decade = 10);

}  // namespace flowlab
