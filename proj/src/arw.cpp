#include "flowlab/arw.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "flowlab/errors.hpp"

namespace flowlab {

std::string to_string(UmbilicityVerdict v) {
  switch (v) {
    case UmbilicityVerdict::Decaying: return "Decaying";
    case UmbilicityVerdict::Degenerate: return "Degenerate";
    case UmbilicityVerdict::TooShort: return "TooShort";
  }
  return "?";
}

std::string to_string(OrderVerdict v) {
  switch (v) {
    case OrderVerdict::Supported: return "Supported";
    case OrderVerdict::Unsupported: return "Unsupported";
    case OrderVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

namespace {

const ARWProfile& require_arw(const AmbientModel& model) {
  const ARWProfile* a = model.arw();
  if (!a) throw ConfigError("model '" + model.label() + "' is not an ARW model");
  return *a;
}

double sup_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) m = std::max(m, std::abs(a[p] - b[p]));
  return m;
}

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double k = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / k, my = sy / k;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

}  // namespace

RescaledState rescaled_state(const AmbientModel& model, const GraphState& state) {
  const ARWProfile& a = require_arw(model);
  const HypersurfaceGeometry geom = compute_geometry(model, state);
  const int n = geom.n;
  const std::size_t np = geom.pts.size();
  RescaledState r;
  r.t = state.t;
  r.u_tilde.resize(np);
  r.g_rescaled.resize(np);
  r.umbilicity.resize(np);
  r.umbilicity_raw.resize(np);
  const double eg = std::exp(a.gamma * state.t), em = std::exp(2.0 * state.t / n);
  for (std::size_t p = 0; p < np; ++p) {
    const PointGeometry& q = geom.pts[p];
    r.u_tilde[p] = state.u[p] * eg;
    r.g_rescaled[p].fill(0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r.g_rescaled[p][i * 3 + j] = em * q.g[i][j];
    double A[3][3];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A[i][j] = q.hmix[i][j] - (i == j ? q.H / n : 0.0);
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) norm2 += A[i][j] * A[j][i];
    r.umbilicity_raw[p] = std::sqrt(std::max(norm2, 0.0));
    r.umbilicity[p] = r.umbilicity_raw[p] / std::abs(q.H);
  }
  return r;
}

RescaledSeries run_rescaled_imcf(const ModelPtr& model, const GraphState& initial, double t_max,
                                 const RescaledOptions& opts) {
  if (!model) throw ConfigError("no model");
  RescaledSeries out;
  out.profile = require_arw(*model);
  {
    const HypersurfaceGeometry g0 = compute_geometry(*model, initial);
    for (std::size_t p = 0; p < g0.pts.size(); ++p)
      if (!(g0.pts[p].H > 0.0))
        throw DomainError("initial slice needs positive mean curvature (point " + std::to_string(p) +
                          ")");
  }
  FlowConfig cfg;
  cfg.model = model;
  cfg.mode = FlowMode::IMCFConformal;
  cfg.t_max = t_max;
  cfg.dt_max = opts.dt_max;
  cfg.fixed_dt = opts.fixed_dt;
  cfg.dt_safety = opts.dt_safety;
  cfg.convergence_tol = 0.0;  // u_t → 0 at the singularity is not convergence
  cfg.snapshot_every = opts.snapshot_every;
  cfg.monitor_every = std::max(1, opts.snapshot_every);
  out.run = run(cfg, initial);

  for (const GraphState& s : out.run.snapshots) out.states.push_back(rescaled_state(*model, s));

  out.c1 = std::numeric_limits<double>::infinity();
  out.c2 = -std::numeric_limits<double>::infinity();
  for (const auto& st : out.states)
    for (double x : st.u_tilde) {
      out.c1 = std::min(out.c1, -x);
      out.c2 = std::max(out.c2, -x);
    }
  const auto& last = out.states.back();
  const double t0 = out.states.front().t, t1 = last.t;
  const double tq = t1 - 0.25 * (t1 - t0);
  std::vector<double> rate;
  for (std::size_t k = 0; k < out.states.size(); ++k) {
    const auto& st = out.states[k];
    if (st.t < tq) continue;
    out.drift_last_quartile = std::max(out.drift_last_quartile, sup_abs_diff(st.u_tilde, last.u_tilde));
    if (k > 0 && st.t > out.states[k - 1].t)
      rate.push_back(sup_abs_diff(st.u_tilde, out.states[k - 1].u_tilde) / (st.t - out.states[k - 1].t));
  }
  if (rate.size() >= 2) out.late_divergence = rate.back() > rate.front() * (1.0 + 1e-2) + 1e-14;
  return out;
}

MetricLimitReport check_rescaled_metric_limit(const RescaledSeries& series,
                                              const AmbientModel& model) {
  const ARWProfile& a = require_arw(model);
  const int n = model.n();
  MetricLimitReport rep;
  const double scale = std::pow(a.gamma_tilde * a.mass, 1.0 / a.gamma_tilde);
  LocalData ld;
  for (std::size_t k = 0; k < series.states.size(); ++k) {
    const RescaledState& st = series.states[k];
    const SpatialGrid& grid = series.run.snapshots[k].grid;
    std::vector<std::array<double, 9>> target(st.u_tilde.size());
    double err = 0.0, tmax = 0.0;
    for (std::size_t p = 0; p < st.u_tilde.size(); ++p) {
      const auto xi = grid.point(p);
      const STPoint x{-1e-300, xi[0], xi[1], xi[2]};  // σ_ij at the singularity
      model.local(x, ld);
      const double c = scale * std::pow(-st.u_tilde[p], 2.0 / a.gamma_tilde);
      target[p].fill(0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          target[p][i * 3 + j] = c * ld.sig[i][j];
          tmax = std::max(tmax, std::abs(target[p][i * 3 + j]));
          err = std::max(err, std::abs(st.g_rescaled[p][i * 3 + j] - target[p][i * 3 + j]));
        }
    }
    rep.errors.push_back(err / tmax);
    if (k + 1 == series.states.size()) {
      rep.limit_error = err / tmax;
      rep.target = std::move(target);
    }
  }
  if (n >= 2) {
    for (const auto& g : series.states.back().g_rescaled) {
      double off = 0.0, diag = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j) off = std::max(off, std::abs(g[i * 3 + j]));
          else diag = std::max(diag, std::abs(g[i * 3 + i] - g[0]));
      rep.anisotropy = std::max(rep.anisotropy, (off + diag) / std::abs(g[0]));
    }
  }
  return rep;
}

UmbilicityReport check_umbilicity_decay(const RescaledSeries& series) {
  UmbilicityReport rep;
  const ARWProfile& a = series.profile;
  const int n = a.n;
  rep.predicted_rate = 2.0 * a.gamma;
  const double improved = (n + a.omega - 4.0) / (2.0 * n);
  rep.improved_rate = improved > 0.0 ? improved : std::numeric_limits<double>::quiet_NaN();

  double peak = 0.0;
  std::vector<double> t, lm, lr;
  const double t0 = series.states.front().t, t1 = series.states.back().t;
  for (const auto& st : series.states) {
    const double m = *std::max_element(st.umbilicity.begin(), st.umbilicity.end());
    const double r = *std::max_element(st.umbilicity_raw.begin(), st.umbilicity_raw.end());
    peak = std::max(peak, m);
    if (st.t < 0.5 * (t0 + t1) || !(m > 0.0) || !(r > 0.0)) continue;
    t.push_back(st.t);
    lm.push_back(std::log(m));
    lr.push_back(std::log(r));
  }
  if (peak < 1e-14) {
    rep.verdict = UmbilicityVerdict::Degenerate;
    return rep;
  }
  if (t.size() < 3) return rep;
  rep.rate = -fit_slope(t, lm);
  rep.raw_rate = -fit_slope(t, lr);
  rep.verdict = UmbilicityVerdict::Decaying;
  return rep;
}

double s_of_t(double gamma, double t, int branch) {
  return (branch < 0 ? -1.0 : 1.0) * std::exp(-gamma * t) / gamma;
}

double t_of_s(double gamma, double s) { return -std::log(gamma * std::abs(s)) / gamma; }

TransitionFlow build_transition_flow(const RescaledSeries& series) {
  const auto& snaps = series.run.snapshots;
  if (snaps.size() < 2) throw ConstructionError("transition flow needs at least two flow states");
  if (series.run.verdict != Verdict::HorizonReached)
    throw ConstructionError("flow ended with " + to_string(series.run.verdict));
  TransitionFlow tf;
  tf.gamma = series.profile.gamma;
  tf.grid = snaps.front().grid;
  tf.dt = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < snaps.size(); ++k) {
    const double d = snaps[k].t - snaps[k - 1].t;
    if (!(d > 0.0)) throw ConstructionError("flow time is not strictly increasing");
    tf.dt = std::min(tf.dt, d);
  }
  const std::size_t K = snaps.size();
  for (std::size_t k = 0; k < K; ++k) {
    tf.s.push_back(s_of_t(tf.gamma, snaps[k].t, -1));
    tf.t.push_back(snaps[k].t);
    tf.y0.push_back(snaps[k].u);
  }
  tf.crossing = K;
  for (std::size_t k = K; k-- > 0;) {
    tf.s.push_back(s_of_t(tf.gamma, snaps[k].t, +1));
    tf.t.push_back(snaps[k].t);
    Field y(snaps[k].u.size());
    for (std::size_t p = 0; p < y.size(); ++p) y[p] = -snaps[k].u[p];
    tf.y0.push_back(std::move(y));
  }
  for (std::size_t k = 1; k < tf.s.size(); ++k)
    if (!(tf.s[k] > tf.s[k - 1])) throw ConstructionError("s is not strictly increasing");
  return tf;
}

C3Report c3_probe(const TransitionFlow& tf, const C3Options& opts) {
  C3Report rep;
  const double dt = opts.dt > 0.0 ? opts.dt : tf.dt;
  for (int k = 1; k <= 4; ++k) rep.threshold[k] = 10.0 * std::pow(dt, 4 - k);

  const std::size_t K = tf.crossing;
  for (std::size_t i = 0; i < K; ++i) {
    const Field& a = tf.y0[i];
    const Field& b = tf.y0[tf.s.size() - 1 - i];
    for (std::size_t p = 0; p < a.size(); ++p)
      rep.odd_symmetry_error = std::max(rep.odd_symmetry_error, std::abs(a[p] + b[p]));
  }

  const int deg = opts.degree;
  const std::size_t np = tf.y0.front().size();
  // D[side][level] is a (deg+1) × np matrix of one-sided derivatives D^k y.
  std::vector<Eigen::MatrixXd> D[2];
  bool resolved = true;
  for (int side = 0; side < 2; ++side) {
    for (int j = 0; j < opts.levels; ++j) {
      const double delta = opts.delta0 * std::pow(0.5, j);
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < tf.s.size(); ++i) {
        const double s = tf.s[i];
        if (side == 0 ? (s < 0.0 && s >= -delta) : (s > 0.0 && s <= delta)) idx.push_back(i);
      }
      if (idx.size() < static_cast<std::size_t>(2 * (deg + 1))) {
        resolved = false;
        break;
      }
      const auto m = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXd V(m, deg + 1), Y(m, static_cast<Eigen::Index>(np));
      for (Eigen::Index r = 0; r < m; ++r) {
        const double x = tf.s[idx[static_cast<std::size_t>(r)]] / delta;
        double pw = 1.0;
        for (int c = 0; c <= deg; ++c, pw *= x) V(r, c) = pw;
        const Field& y = tf.y0[idx[static_cast<std::size_t>(r)]];
        for (std::size_t p = 0; p < np; ++p) Y(r, static_cast<Eigen::Index>(p)) = y[p];
      }
      Eigen::MatrixXd C = V.colPivHouseholderQr().solve(Y);
      double fact = 1.0;
      for (int c = 1; c <= deg; ++c) {
        fact *= c;
        C.row(c) *= fact / std::pow(delta, c);
      }
      D[side].push_back(std::move(C));
    }
    if (!resolved) break;
  }
  if (!resolved || opts.levels < 3) {
    for (int k = 1; k <= 4; ++k) rep.verdicts[k] = OrderVerdict::Inconclusive;
    return rep;
  }

  for (int k = 1; k <= 4; ++k) {
    const double w = std::pow(2.0, deg + 1 - k);
    for (int j = 0; j + 1 < opts.levels; ++j) {
      double gap = 0.0;
      for (std::size_t p = 0; p < np; ++p) {
        const auto P = static_cast<Eigen::Index>(p);
        double r[2];
        for (int side = 0; side < 2; ++side)
          r[side] = (w * D[side][j + 1](k, P) - D[side][j](k, P)) / (w - 1.0);
        gap = std::max(gap, std::abs(r[1] - r[0]));
      }
      rep.gaps[k].push_back(gap);
    }
    const auto& g = rep.gaps[k];
    const bool a = g[g.size() - 1] < rep.threshold[k], b = g[g.size() - 2] < rep.threshold[k];
    rep.verdicts[k] = (a && b) ? OrderVerdict::Supported
                      : (!a && !b) ? OrderVerdict::Unsupported
                                   : OrderVerdict::Inconclusive;
  }
  for (int k = 1; k <= 4 && rep.verdicts[k] == OrderVerdict::Supported; ++k) rep.order_supported = k;
  return rep;
}

CmcAsymptotics cmc_foliation_asymptotics(const AmbientModel& model, double phi0, int decades,
                                         int per_decade) {
  const ARWProfile& a = require_arw(model);
  if (!(phi0 < 0.0)) throw ConfigError("phi0 must be negative");
  const int n = model.n();
  const SpatialGrid grid{n, 32, model.period()};
  {
    LocalData l0, l1;
    STPoint x0{phi0, 0.0, 0.0, 0.0}, x1{phi0, 0.0, 0.0, 0.0};
    for (int i = 0; i < n; ++i) x1[i + 1] = model.period() / 3.0;
    model.local(x0, l0);
    model.local(x1, l1);
    if (std::abs(l0.psi - l1.psi) > 1e-14 * std::max(1.0, std::abs(l0.psi)))
      throw ConfigError("coordinate slices are CMC only for homogeneous models");
  }
  CmcAsymptotics out;
  const double expo = 1.0 + 1.0 / a.gamma_tilde;
  const int total = decades * per_decade;
  for (int k = 0; k <= total; ++k) {
    const double phi = phi0 * std::pow(10.0, -static_cast<double>(k) / per_decade);
    const HypersurfaceGeometry g = compute_geometry(model, constant_state(grid, phi));
    double hmin = g.pts[0].H, hmax = g.pts[0].H;
    for (const auto& q : g.pts) {
      hmin = std::min(hmin, q.H);
      hmax = std::max(hmax, q.H);
    }
    if (hmax - hmin > 1e-10 * std::abs(hmax)) throw NumericalError("coordinate slice is not CMC");
    out.phi.push_back(phi);
    out.tau.push_back(g.pts[0].H);
    out.product.push_back(g.pts[0].H * std::pow(-phi, expo));
  }
  out.constant = out.product.back();
  for (int k = total - per_decade; k <= total; ++k)
    out.drift_last_decade =
        std::max(out.drift_last_decade, std::abs(out.product[static_cast<std::size_t>(k)] / out.constant - 1.0));
  // The slices are level sets of x⁰, so φ(τ, ·) is constant.
  out.homogeneity_ratio = 1.0;

  const double q = a.gamma_tilde / (1.0 + a.gamma_tilde);
  std::vector<double> s(out.tau.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = -std::pow(out.tau[k], -q);
  out.ds_dphi_min = std::numeric_limits<double>::infinity();
  out.ds_dphi_max = 0.0;
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    const double d = (s[k + 1] - s[k - 1]) / (out.phi[k + 1] - out.phi[k - 1]);
    out.ds_dphi_min = std::min(out.ds_dphi_min, std::abs(d));
    out.ds_dphi_max = std::max(out.ds_dphi_max, std::abs(d));
  }
  return out;
}

}  // namespace flowlab
