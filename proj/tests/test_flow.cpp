#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "flowlab/errors.hpp"
#include "flowlab/flow.hpp"

using namespace flowlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ModelPtr rw(int n, double p_exp, double period) {
  ModelParams p;
  p.label = "robertson_walker";
  p.n = n;
  p.p = p_exp;
  p.period = period;
  return make_model(p);
}

ModelPtr arw(int n, double omega, double beta, double period) {
  ModelParams p;
  p.label = "arw_power";
  p.n = n;
  p.omega = omega;
  p.beta = beta;
  p.period = period;
  return make_model(p);
}

// Barrier-slab configuration: H-flow with f̃ = 2(1 + 0.1 Σ cos x^i) in RW, p = 1.
FlowConfig barrier_config() {
  FlowConfig c;
  c.model = rw(2, 1.0, kTwoPi);
  c.forcing.f0 = 2.0;
  c.forcing.amp = 0.1;
  c.t_max = 100.0;
  c.monitor_every = 10;
  return c;
}

}  // namespace

// Homogeneous IMCF in e^f = (-τ)^p solves u' = -u/(np), so u = u0 e^{-t/(np)}.
TEST(Flow, HomogeneousImcfFollowsTheSliceOde) {
  FlowConfig c;
  c.model = rw(2, 4.0, 1.0);
  c.mode = FlowMode::IMCF;
  c.fixed_dt = 1e-3;
  c.t_max = 1.0;
  const FlowRun r = run(c, constant_state(SpatialGrid{2, 32, 1.0}, -2.0));
  ASSERT_EQ(r.verdict, Verdict::HorizonReached);
  const double want = -2.0 * std::exp(-1.0 / 8.0);
  for (double u : r.final_state.u) EXPECT_NEAR(u, want, 1e-10);
}

TEST(Flow, ImcfVolumeDecaysLikeExpMinusT) {
  FlowConfig c;
  c.model = rw(2, 4.0, 1.0);
  c.mode = FlowMode::IMCF;
  c.t_max = 3.0;
  const FlowRun r = run(c, constant_state(SpatialGrid{2, 32, 1.0}, -2.0));
  const ImcfDiagnostics d = imcf_diagnostics(r);
  EXPECT_NEAR(d.volume_decay_slope, -1.0, 1e-6);
  EXPECT_LT(d.tau_volume_error, 1e-6);
  for (std::size_t k = 0; k < d.tau.size(); ++k)
    EXPECT_NEAR(d.tau[k], 1.0 - std::exp(-r.series[k].t / 2.0), 1e-14);
}

TEST(Flow, ImcfStopsWhenCurvatureIsUnresolved) {
  FlowConfig c;
  c.model = rw(2, 4.0, 1.0);
  c.mode = FlowMode::IMCF;
  c.t_max = 50.0;
  const FlowRun r = run(c, constant_state(SpatialGrid{2, 32, 1.0}, -2.0));
  EXPECT_EQ(r.verdict, Verdict::HorizonReached);
  EXPECT_LT(r.final_state.t, 50.0);
  EXPECT_NE(r.message.find("resolved"), std::string::npos);
  // κ e^ψ = 4/(-τ) crosses 0.1/Δx at τ = -1.25
  EXPECT_NEAR(r.final_state.u[0], -1.25, 0.01);
}

TEST(Flow, RhsIsTranslationEquivariant) {
  FlowConfig c = barrier_config();
  c.forcing.amp = 0.0;  // x-independent data
  const SpatialGrid g{2, 32, kTwoPi};
  const GraphState s = random_band_limited(g, -1.0, 0.05, 2, 9);
  GraphState shifted = s;
  shifted.u = translate(g, s.u, {5, -3, 0});
  const Field a = rhs(c, shifted);
  const Field b = translate(g, rhs(c, s), {5, -3, 0});
  for (std::size_t p = 0; p < a.size(); ++p) EXPECT_NEAR(a[p], b[p], 1e-13);
}

// The rescaled IMCF is a geometric flow, so reflecting the chart maps
// solutions to solutions: rhs(mirror, -u) = -rhs(model, u).
TEST(Flow, ConformalImcfCommutesWithReflection) {
  FlowConfig c;
  c.model = arw(2, 2.0, 0.5, kTwoPi);
  c.mode = FlowMode::IMCFConformal;
  FlowConfig m = c;
  m.model = mirrored(c.model);
  const SpatialGrid g{2, 32, kTwoPi};
  const GraphState s = random_band_limited(g, -1.0, 0.05, 2, 4);
  GraphState ms = s;
  for (double& u : ms.u) u = -u;
  const Field a = rhs(c, s), b = rhs(m, ms);
  for (std::size_t p = 0; p < a.size(); ++p) EXPECT_NEAR(b[p], -a[p], 1e-12 * std::abs(a[p]) + 1e-14);
}

TEST(Flow, OversizedStepIsRejected) {
  const FlowConfig c = barrier_config();
  const GraphState s = random_band_limited(SpatialGrid{2, 64, kTwoPi}, -0.9, 0.05, 2, 1);
  const double lim = cfl_limit(c, s);
  EXPECT_GT(lim, 0.0);
  EXPECT_THROW(step(c, s, 50.0 * lim), CflError);
  EXPECT_NO_THROW(step(c, s, 0.5 * lim));
}

TEST(Flow, BarrierRunConvergesWithPreservedSign) {
  const FlowRun r = run(barrier_config(), constant_state(SpatialGrid{2, 32, kTwoPi}, -0.9));
  ASSERT_EQ(r.verdict, Verdict::Converged);
  const VelocitySign vs = check_velocity_sign(r);
  EXPECT_TRUE(vs.preserved);
  EXPECT_TRUE(vs.strict_positivity_of_integral);
  EXPECT_GE(vs.min_over_run, -1e-9);
  for (const MonitorRow& row : r.series) {
    EXPECT_GE(row.inf_velocity, -1e-9);
    EXPECT_GT(row.integral_velocity, 0.0);
  }
  EXPECT_LT(c2_growth_after_first_quartile(r), 0.01);
  // the limit satisfies Φ = f̃ up to the convergence tolerance
  RhsEvaluation ev;
  evaluate_rhs(r.config, r.final_state, ev, false);
  for (double G : ev.G) EXPECT_LT(std::abs(G), 1e-6);
}

TEST(Flow, HomogeneousRunSatisfiesEvolutionIdentities) {
  FlowConfig c;
  c.model = rw(1, 4.0, 1.0);
  c.mode = FlowMode::IMCF;
  c.snapshot_every = 1;
  const GraphState s = constant_state(SpatialGrid{1, 32, 1.0}, -2.0);
  c.fixed_dt = 0.5 * cfl_limit(c, s);
  c.t_max = 8 * c.fixed_dt;
  const FlowRun r = run(c, s);
  const IdentityResiduals ir = check_evolution_identities(r, r.snapshots.size() / 2);
  EXPECT_LT(ir.metric, 1e-8);
  EXPECT_LT(ir.normal, 1e-8);
  EXPECT_LT(ir.second, 1e-8);
  EXPECT_LT(ir.speed, 1e-8);
}

TEST(Flow, IdentityWindowNeedsFiveSnapshots) {
  FlowConfig c = barrier_config();
  c.fixed_dt = 1e-3;
  c.t_max = 2e-3;
  c.snapshot_every = 1;
  const FlowRun r = run(c, constant_state(SpatialGrid{2, 32, kTwoPi}, -0.9));
  EXPECT_THROW(check_evolution_identities(r, 1), ConfigError);
}

TEST(Flow, LogDetRelationOnSlices) {
  EXPECT_LT(log_det_relation_residual(*rw(2, 2.0, 1.0), -2.0, -0.5), 1e-8);
}

TEST(Flow, StrongVolumeDecayForPowerLawCrunch) {
  const StrongDecayReport r = check_strong_volume_decay(*arw(2, 2.0, 0.0, 1.0), {-1.0}, 2.0);
  EXPECT_EQ(r.verdict, DecayVerdict::Holds);
  EXPECT_TRUE(r.unbounded);
  // ∫ c/(-τ) over one decade is c log 10
  for (std::size_t k = 1; k < r.partial_sums.size(); ++k)
    EXPECT_NEAR(r.partial_sums[k] - r.partial_sums[k - 1], 2.0 * std::log(10.0), 1e-6);
}

TEST(Flow, InitialStateOutsideTheConeIsRejected) {
  FlowConfig c;
  ModelParams p;
  p.label = "de_sitter_conformal";
  p.n = 2;
  p.period = kTwoPi;
  c.model = make_model(p);
  c.curvature.kind = FKind::GaussK;
  c.curvature.phi = PhiKind::Log;
  c.forcing.f0 = 1.0;
  // A saddle whose second derivatives (±1.6) beat the slice curvature.
  const SpatialGrid g{2, 64, kTwoPi};
  GraphState s = constant_state(g, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.point(i);
    s.u[i] += 0.1 * (std::cos(4 * x[0]) - std::cos(4 * x[1]));
  }
  EXPECT_THROW(run(c, s), AdmissibilityError);
}

TEST(Flow, ModeNamesRoundTrip) {
  for (const char* m : {"generic", "imcf", "imcf_conformal"}) EXPECT_EQ(to_string(parse_mode(m)), m);
  EXPECT_THROW(parse_mode("mcf"), ConfigError);
}
