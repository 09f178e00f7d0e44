#include <gtest/gtest.h>

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>

#include "flowlab/arw.hpp"
#include "flowlab/errors.hpp"

using namespace flowlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ModelParams arw_params(int n, double omega, double beta, double c0 = 1.0) {
  ModelParams p;
  p.label = "arw_power";
  p.n = n;
  p.omega = omega;
  p.beta = beta;
  p.c0 = c0;
  p.period = kTwoPi;
  return p;
}

// f' for e^f = c0 (-τ)^p (1 + β(-τ)^κ), written out independently.
double warp_slope(double tau, double p, double beta, double kappa) {
  const double x = -tau;
  return p / tau - beta * kappa * std::pow(x, kappa - 1.0) / (1.0 + beta * std::pow(x, kappa));
}

RescaledSeries homogeneous_series(const ModelParams& p, double t_max) {
  RescaledOptions o;
  o.dt_max = 0.01;
  o.snapshot_every = 10;
  return run_rescaled_imcf(make_model(p), constant_state(SpatialGrid{p.n, 32, kTwoPi}, -1.0), t_max, o);
}

}  // namespace

TEST(Arw, TransitionParameterInvertsFlowTime) {
  for (double gamma : {0.5, 1.25})
    for (double t : {0.0, 0.7, 5.0}) {
      const double s = s_of_t(gamma, t, -1);
      EXPECT_LT(s, 0.0);
      EXPECT_DOUBLE_EQ(s_of_t(gamma, t, +1), -s);
      EXPECT_NEAR(t_of_s(gamma, s), t, 1e-12);
      EXPECT_NEAR(t_of_s(gamma, -s), t, 1e-12);
    }
  EXPECT_DOUBLE_EQ(s_of_t(0.5, 0.0, -1), -2.0);
}

// Pure power law: the homogeneous rescaled height ũ = u e^{γt} is constant.
TEST(Arw, PurePowerRescaledHeightIsConstant) {
  const RescaledSeries sr = homogeneous_series(arw_params(2, 2.0, 0.0), 4.0);
  EXPECT_NEAR(sr.c1, 1.0, 1e-8);
  EXPECT_NEAR(sr.c2, 1.0, 1e-8);
  EXPECT_LT(sr.drift_last_quartile, 1e-8);
}

TEST(Arw, HomogeneousHeightMatchesOdeOracle) {
  const ModelParams p = arw_params(2, 2.0, 0.5);
  const ARWProfile a = ARWProfile::make(p.n, p.omega, p.c0, p.beta, p.kappa);
  const RescaledSeries sr = homogeneous_series(p, 6.0);
  using State = std::array<double, 1>;
  auto rhs = [&](const State& u, State& du, double) { du[0] = 1.0 / (-p.n * warp_slope(u[0], a.warp.p, p.beta, a.warp.kappa)); };
  namespace ode = boost::numeric::odeint;
  State u{-1.0};
  double t = 0.0;
  for (const RescaledState& st : sr.states) {
    if (st.t > t) {
      ode::integrate_adaptive(ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>()), rhs, u, t,
                              st.t, 1e-3);
      t = st.t;
    }
    const double want = u[0] * std::exp(a.gamma * st.t);
    EXPECT_NEAR(st.u_tilde[0], want, 1e-7 * std::abs(want)) << "t = " << st.t;
  }
}

TEST(Arw, RescaledMetricApproachesTheLimitProfile) {
  const ModelParams p = arw_params(2, 2.0, 0.5);
  const RescaledSeries sr = homogeneous_series(p, 16.0);
  const MetricLimitReport ml = check_rescaled_metric_limit(sr, *make_model(p));
  EXPECT_LT(ml.limit_error, 1e-3);
  EXPECT_LT(ml.anisotropy, 1e-10);
  // the error shrinks as the crunch is approached
  EXPECT_LT(ml.errors.back(), ml.errors[ml.errors.size() / 4]);
  // target (γ̃m)^{1/γ̃}(-ũ)^{2/γ̃} with γ̃ = m = 1
  const double ut = sr.states.back().u_tilde[0];
  EXPECT_NEAR(ml.target[0][0], ut * ut, 1e-12);
}

TEST(Arw, UmbilicSlicesGiveADegenerateDecayFit) {
  const RescaledSeries sr = homogeneous_series(arw_params(2, 2.0, 0.0), 2.0);
  EXPECT_EQ(check_umbilicity_decay(sr).verdict, UmbilicityVerdict::Degenerate);
}

TEST(Arw, RequiresAnArwModel) {
  ModelParams p;
  p.label = "robertson_walker";
  p.period = kTwoPi;
  EXPECT_THROW(run_rescaled_imcf(make_model(p), constant_state(SpatialGrid{2, 32, kTwoPi}, -1.0), 1.0),
               ConfigError);
}

TEST(Arw, TransitionFlowIsOddAcrossTheCrunch) {
  ModelParams p = arw_params(1, 3.0, 0.0);
  RescaledOptions o;
  o.fixed_dt = 0.005;
  o.snapshot_every = 1;
  const RescaledSeries sr = run_rescaled_imcf(make_model(p), constant_state(SpatialGrid{1, 32, kTwoPi}, -1.0), 30.0, o);
  const TransitionFlow tf = build_transition_flow(sr);
  ASSERT_GT(tf.crossing, 0u);
  EXPECT_LT(tf.s[tf.crossing - 1], 0.0);
  EXPECT_GT(tf.s[tf.crossing], 0.0);
  for (std::size_t k = 1; k < tf.s.size(); ++k) EXPECT_LT(tf.s[k - 1], tf.s[k]);
  for (std::size_t k = 0; k < tf.crossing; ++k) {
    const std::size_t m = tf.s.size() - 1 - k;
    EXPECT_DOUBLE_EQ(tf.s[m], -tf.s[k]);
    EXPECT_DOUBLE_EQ(tf.y0[m][0], -tf.y0[k][0]);
  }
  const C3Report rep = c3_probe(tf);
  EXPECT_GE(rep.order_supported, 3);
  EXPECT_EQ(rep.odd_symmetry_error, 0.0);
  // odd-order derivatives of an odd function are even, so their jumps vanish
  for (double gap : rep.gaps[1]) EXPECT_LT(gap, 1e-10);
  for (double gap : rep.gaps[3]) EXPECT_LT(gap, 1e-6);
}

TEST(Arw, CmcSlicesHaveConstantScaledMeanCurvature) {
  const ModelParams p = arw_params(2, 2.0, 0.0, 1.5);
  const CmcAsymptotics c = cmc_foliation_asymptotics(*make_model(p));
  EXPECT_NEAR(c.constant, 2.0 / 1.5, 1e-10);  // n/(γ̃ c0)
  EXPECT_LT(c.drift_last_decade, 1e-10);
  EXPECT_NEAR(c.ds_dphi_min, std::sqrt(0.75), 1e-8);  // (γ̃c0/n)^{γ̃/(1+γ̃)}
  EXPECT_NEAR(c.ds_dphi_max, c.ds_dphi_min, 1e-8);
  EXPECT_DOUBLE_EQ(c.homogeneity_ratio, 1.0);
}

TEST(Arw, CmcAsymptoticsNeedAHomogeneousModel) {
  ModelParams p = arw_params(2, 2.0, 0.0);
  p.eps = 0.1;
  EXPECT_THROW(cmc_foliation_asymptotics(*make_model(p)), ConfigError);
}
