#include "flowlab/flow.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "flowlab/errors.hpp"
#include "flowlab/simd.hpp"
#include "flowlab/smallmat.hpp"

namespace flowlab {

double ForcingSpec::value(const STPoint& p, int n, double L) const {
  double s = 0.0;
  if (amp != 0.0) {
    const double k = 2.0 * std::numbers::pi / L;
    for (int i = 0; i < n; ++i) s += std::cos(k * p[i + 1]);
  }
  return f0 * (1.0 + amp * s) + slope * p[0];
}

void ForcingSpec::gradient(const STPoint& p, int n, double L, double out[4]) const {
  const double k = 2.0 * std::numbers::pi / L;
  out[0] = slope;
  for (int i = 0; i < 3; ++i) out[i + 1] = (i < n) ? -f0 * amp * k * std::sin(k * p[i + 1]) : 0.0;
}

FlowMode parse_mode(const std::string& s) {
  if (s == "generic") return FlowMode::Generic;
  if (s == "imcf") return FlowMode::IMCF;
  if (s == "imcf_conformal") return FlowMode::IMCFConformal;
  throw ConfigError("unknown flow mode '" + s + "' (expected generic, imcf or imcf_conformal)");
}

std::string to_string(FlowMode m) {
  switch (m) {
    case FlowMode::Generic: return "generic";
    case FlowMode::IMCF: return "imcf";
    case FlowMode::IMCFConformal: return "imcf_conformal";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "Converged";
    case Verdict::HorizonReached: return "HorizonReached";
    case Verdict::Blowup: return "Blowup";
    case Verdict::SpacelikenessLost: return "SpacelikenessLost";
    case Verdict::ConeExit: return "ConeExit";
  }
  return "?";
}

std::string to_string(DecayVerdict v) {
  switch (v) {
    case DecayVerdict::Holds: return "Holds";
    case DecayVerdict::Fails: return "Fails";
    case DecayVerdict::NotApplicable: return "NotApplicable";
  }
  return "?";
}

namespace {

double max_eigenvalue(int n, const double a[3][3]) {
  double m[4][4] = {};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i][j] = -a[i][j];
  return -smallmat::min_eigenvalue(n, m);
}

const AmbientModel& evolved_model(const FlowConfig& cfg, ModelPtr& holder) {
  if (cfg.mode != FlowMode::IMCFConformal) return *cfg.model;
  holder = conformal_view(cfg.model);
  return *holder;
}

}  // namespace

void evaluate_rhs(const FlowConfig& cfg, const GraphState& state, RhsEvaluation& out,
                  bool need_diffusion) {
  if (!cfg.model) throw ConfigError("flow configuration has no model");
  ModelPtr holder;
  const AmbientModel& evolved = evolved_model(cfg, holder);
  compute_geometry(evolved, state, out.geom);
  const int n = out.geom.n;
  const std::size_t np = out.geom.pts.size();
  out.dudt.resize(np);
  out.G.resize(np);
  out.weight.resize(np);
  out.diffusion = 0.0;
  out.max_curvature = 0.0;
  const double L = state.grid.L;

  CurvatureValues cv;
  LocalData ld;
  for (std::size_t p = 0; p < np; ++p) {
    const PointGeometry& q = out.geom.pts[p];
    const double emp = std::exp(-q.psi);
    switch (cfg.mode) {
      case FlowMode::Generic: {
        eval_point(cfg.curvature, n, q, p, cv, need_diffusion);
        const STPoint x = q.position(state.grid, p);
        const double f = cfg.forcing.value(x, n, L);
        if (cfg.curvature.phi != PhiKind::Identity && !(f > 0.0))
          throw DomainError("forcing must be positive for this phi");
        const double G = cv.Phi - cfg.curvature.Phi(f, n);
        out.G[p] = G;
        out.dudt[p] = -emp * q.v * G;
        out.weight[p] = q.sqrt_g;
        if (need_diffusion) out.diffusion = std::max(out.diffusion, cv.dPhi * max_eigenvalue(n, cv.Fij));
        for (int i = 0; i < n; ++i)
          out.max_curvature = std::max(out.max_curvature, std::abs(q.kappa[i]) / emp);
        break;
      }
      case FlowMode::IMCF: {
        if (!(q.H > 0.0))
          throw DomainError("mean curvature must be positive under IMCF (point " +
                            std::to_string(p) + ")");
        out.G[p] = -1.0 / q.H;
        out.dudt[p] = emp * q.v / q.H;
        out.weight[p] = q.sqrt_g;
        if (need_diffusion)
          out.diffusion = std::max(out.diffusion, max_eigenvalue(n, q.ginv) / (q.H * q.H));
        for (int i = 0; i < n; ++i)
          out.max_curvature = std::max(out.max_curvature, std::abs(q.kappa[i]) / emp);
        break;
      }
      case FlowMode::IMCFConformal: {
        const STPoint x = q.position(state.grid, p);
        cfg.model->local(x, ld);
        double shift = 0.0;
        for (int a = 0; a <= n; ++a) shift += ld.dpsi[a] * q.nu[a];
        const double F = q.H + n * shift;
        // Either sign is admissible (the mirrored chart flips it) but not both.
        if (!(F != 0.0) || (p > 0 && (F > 0.0) != (out.dudt[0] > 0.0)))
          throw DomainError("rescaled mean curvature vanishes or changes sign (point " +
                            std::to_string(p) + ")");
        out.dudt[p] = q.v / F;
        out.G[p] = -std::exp(ld.psi) / F;
        out.weight[p] = std::exp(n * ld.psi) * q.sqrt_g;
        if (need_diffusion) out.diffusion = std::max(out.diffusion, max_eigenvalue(n, q.ginv) / (F * F));
        for (int i = 0; i < n; ++i)
          out.max_curvature = std::max(out.max_curvature, std::abs(q.kappa[i]));
        break;
      }
    }
  }
}

Field rhs(const FlowConfig& cfg, const GraphState& state) {
  RhsEvaluation ev;
  evaluate_rhs(cfg, state, ev, false);
  return ev.dudt;
}

namespace {

double cfl_from(const FlowConfig& cfg, const SpatialGrid& grid, double diffusion) {
  if (!(diffusion > 0.0)) return std::numeric_limits<double>::infinity();
  return cfg.dt_safety * grid.dx() * grid.dx() / diffusion;
}

GraphState rk4(const FlowConfig& cfg, const GraphState& s, const Field& k1, double dt) {
  const std::size_t np = s.u.size();
  GraphState tmp{s.grid, Field(np), s.t};
  GraphState out{s.grid, Field(np), s.t + dt};
  simd::axpy(dt / 6.0, k1.data(), s.u.data(), out.u.data(), np);

  simd::axpy(0.5 * dt, k1.data(), s.u.data(), tmp.u.data(), np);
  tmp.t = s.t + 0.5 * dt;
  const Field k2 = rhs(cfg, tmp);
  simd::axpy(dt / 3.0, k2.data(), out.u.data(), out.u.data(), np);

  simd::axpy(0.5 * dt, k2.data(), s.u.data(), tmp.u.data(), np);
  const Field k3 = rhs(cfg, tmp);
  simd::axpy(dt / 3.0, k3.data(), out.u.data(), out.u.data(), np);

  simd::axpy(dt, k3.data(), s.u.data(), tmp.u.data(), np);
  tmp.t = s.t + dt;
  const Field k4 = rhs(cfg, tmp);
  simd::axpy(dt / 6.0, k4.data(), out.u.data(), out.u.data(), np);
  return out;
}

}  // namespace

double cfl_limit(const FlowConfig& cfg, const GraphState& state) {
  RhsEvaluation ev;
  evaluate_rhs(cfg, state, ev, true);
  return cfl_from(cfg, state.grid, ev.diffusion);
}

GraphState step(const FlowConfig& cfg, const GraphState& state, double dt) {
  RhsEvaluation ev;
  evaluate_rhs(cfg, state, ev, true);
  const double limit = cfl_from(cfg, state.grid, ev.diffusion);
  if (dt > limit * (1.0 + 1e-12))
    throw CflError("time step " + std::to_string(dt) + " exceeds the parabolic limit " +
                       std::to_string(limit),
                   limit);
  return rk4(cfg, state, ev.dudt, dt);
}

namespace {

MonitorRow make_row(std::size_t step, double dt, const GraphState& s, const RhsEvaluation& ev) {
  MonitorRow r;
  r.step = step;
  r.t = s.t;
  r.dt = dt;
  const std::size_t np = s.u.size();
  const double cell = s.grid.cell_volume();
  r.sup_velocity = -std::numeric_limits<double>::infinity();
  r.inf_velocity = std::numeric_limits<double>::infinity();
  r.min_kappa = std::numeric_limits<double>::infinity();
  r.max_kappa = -std::numeric_limits<double>::infinity();
  r.u_min = std::numeric_limits<double>::infinity();
  r.u_max = -std::numeric_limits<double>::infinity();
  double umax = 0.0, d1max = 0.0, d2max = 0.0;
  const int n = ev.geom.n;
  for (std::size_t p = 0; p < np; ++p) {
    const PointGeometry& q = ev.geom.pts[p];
    r.volume += ev.weight[p];
    r.integral_velocity += ev.G[p] * ev.weight[p];
    r.sup_velocity = std::max(r.sup_velocity, ev.G[p]);
    r.inf_velocity = std::min(r.inf_velocity, ev.G[p]);
    r.sup_dudt = std::max(r.sup_dudt, std::abs(ev.dudt[p]));
    r.max_vtilde = std::max(r.max_vtilde, q.v_tilde);
    r.min_kappa = std::min(r.min_kappa, q.kappa[0]);
    r.max_kappa = std::max(r.max_kappa, q.kappa[n - 1]);
    r.u_min = std::min(r.u_min, s.u[p]);
    r.u_max = std::max(r.u_max, s.u[p]);
    umax = std::max(umax, std::abs(s.u[p]));
    for (int i = 0; i < n; ++i) {
      d1max = std::max(d1max, std::abs(q.Du[i]));
      for (int j = 0; j < n; ++j) d2max = std::max(d2max, std::abs(q.D2u[i][j]));
    }
  }
  r.volume *= cell;
  r.integral_velocity *= cell;
  r.c2_norm = umax + d1max + d2max;
  return r;
}

bool all_finite(const Field& f) {
  for (double x : f)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

FlowRun run(const FlowConfig& cfg, const GraphState& initial) {
  if (!cfg.model) throw ConfigError("flow configuration has no model");
  if (!(cfg.dt_safety > 0.0)) throw ConfigError("flow.dt_safety must be positive");
  if (cfg.identity_cadence > 0 && !(cfg.fixed_dt > 0.0))
    throw ConfigError("identity monitoring needs a fixed time step");
  if (cfg.monitor_every < 1) throw ConfigError("flow.monitor_every must be >= 1");

  FlowRun r;
  r.config = cfg;
  GraphState cur = initial;
  RhsEvaluation ev;
  evaluate_rhs(cfg, cur, ev, true);
  for (const auto& q : ev.geom.pts) r.initial_vtilde = std::max(r.initial_vtilde, q.v_tilde);
  if (cfg.mode == FlowMode::Generic) {
    double inf = std::numeric_limits<double>::infinity();
    for (double g : ev.G) inf = std::min(inf, g);
    r.monotone_checked = inf >= -1e-9;
  }
  r.snapshots.push_back(cur);

  const double dx = cur.grid.dx();
  std::vector<GraphState> window;
  std::size_t stepno = 0;
  int quiet = 0;
  double last_dt = 0.0;
  bool recorded_last = false;
  auto fail = [&](Verdict v, const std::string& msg) {
    r.verdict = v;
    r.message = msg;
  };

  while (true) {
    recorded_last = false;
    if (stepno % static_cast<std::size_t>(cfg.monitor_every) == 0) {
      r.series.push_back(make_row(stepno, last_dt, cur, ev));
      recorded_last = true;
    }
    double sup = 0.0;
    for (double x : ev.dudt) sup = std::max(sup, std::abs(x));
    quiet = (sup < cfg.convergence_tol) ? quiet + 1 : 0;
    if (quiet >= cfg.convergence_steps) {
      fail(Verdict::Converged, "sup|du/dt| below tolerance");
      break;
    }
    if (cur.t >= cfg.t_max - 1e-12 * std::max(1.0, cfg.t_max)) {
      fail(Verdict::HorizonReached, "t_max reached");
      break;
    }
    if (cfg.mode != FlowMode::Generic && ev.max_curvature * dx > cfg.horizon_factor) {
      fail(Verdict::HorizonReached, "curvature no longer resolved by the grid");
      break;
    }
    if (cfg.mode == FlowMode::Generic && ev.max_curvature * dx > cfg.blowup_factor) {
      fail(Verdict::Blowup, "curvature blow-up");
      break;
    }
    if (stepno >= cfg.max_steps) {
      fail(Verdict::HorizonReached, "step budget exhausted");
      break;
    }
    const double limit = cfl_from(cfg, cur.grid, ev.diffusion);
    double dt;
    if (cfg.fixed_dt > 0.0) {
      if (cfg.fixed_dt > limit * (1.0 + 1e-12))
        throw CflError("fixed time step exceeds the parabolic limit", limit);
      dt = cfg.fixed_dt;
      if (cur.t + dt > cfg.t_max + 1e-12 * std::max(1.0, cfg.t_max)) dt = cfg.t_max - cur.t;
    } else {
      dt = std::min({cfg.dt_max, limit, cfg.t_max - cur.t});
    }

    GraphState next;
    try {
      next = rk4(cfg, cur, ev.dudt, dt);
      if (!all_finite(next.u)) {
        fail(Verdict::Blowup, "non-finite values after step " + std::to_string(stepno + 1));
        break;
      }
      evaluate_rhs(cfg, next, ev, true);
    } catch (const GeometryError& e) {
      fail(Verdict::SpacelikenessLost, e.what());
      break;
    } catch (const AdmissibilityError& e) {
      fail(Verdict::ConeExit, e.what());
      break;
    } catch (const DomainError& e) {
      fail(cfg.mode == FlowMode::Generic ? Verdict::ConeExit : Verdict::Blowup, e.what());
      break;
    }
    if (!all_finite(ev.dudt)) {
      fail(Verdict::Blowup, "non-finite velocity after step " + std::to_string(stepno + 1));
      break;
    }
    if (r.monotone_checked)
      for (std::size_t p = 0; p < cur.u.size(); ++p)
        r.max_monotone_increase = std::max(r.max_monotone_increase, next.u[p] - cur.u[p]);

    if (cfg.identity_cadence > 0) {
      if (window.empty()) window.push_back(cur);
      window.push_back(next);
      if (window.size() > 5) window.erase(window.begin());
      const std::size_t center = stepno + 1 - 2;
      if (window.size() == 5 && center % static_cast<std::size_t>(cfg.identity_cadence) == 0) {
        const IdentityResiduals res = check_evolution_identities(cfg, window);
        for (auto it = r.series.rbegin(); it != r.series.rend(); ++it)
          if (it->step == center) {
            it->residual_g = res.metric;
            it->residual_h = res.second;
            break;
          }
      }
    }

    cur = std::move(next);
    last_dt = dt;
    ++stepno;
    if (cfg.snapshot_every > 0 && stepno % static_cast<std::size_t>(cfg.snapshot_every) == 0)
      r.snapshots.push_back(cur);
  }
  if (!recorded_last) r.series.push_back(make_row(stepno, last_dt, cur, ev));
  if (r.snapshots.back().t != cur.t) r.snapshots.push_back(cur);
  r.final_state = cur;
  return r;
}

// ─── Evolution identities ──────────────────────────────────────────

namespace {

struct SpeedField {
  Field G;
  std::vector<std::array<double, 9>> PhiFij;  // Φ̇ F^{ij}
  Field ftilde_nu;                              // f̃_α ν^α
};

// Physical G = Φ - f̃ with the ingredients of its evolution equation.
SpeedField physical_speed(const FlowConfig& cfg, const GraphState& s,
                          const HypersurfaceGeometry& geom) {
  const int n = geom.n;
  const std::size_t np = geom.pts.size();
  SpeedField out;
  out.G.resize(np);
  out.PhiFij.resize(np);
  out.ftilde_nu.assign(np, 0.0);
  CurvatureValues cv;
  for (std::size_t p = 0; p < np; ++p) {
    const PointGeometry& q = geom.pts[p];
    auto& A = out.PhiFij[p];
    A.fill(0.0);
    if (cfg.mode == FlowMode::Generic) {
      eval_point(cfg.curvature, n, q, p, cv, true);
      const STPoint x = q.position(s.grid, p);
      const double f = cfg.forcing.value(x, n, s.grid.L);
      out.G[p] = cv.Phi - cfg.curvature.Phi(f, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A[i * 3 + j] = cv.dPhi * cv.Fij[i][j];
      double df[4];
      cfg.forcing.gradient(x, n, s.grid.L, df);
      const double dft = cfg.curvature.dPhi(f, n);
      for (int a = 0; a <= n; ++a) out.ftilde_nu[p] += dft * df[a] * q.nu[a];
    } else {
      out.G[p] = -1.0 / q.H;
      const double dphi = 1.0 / (q.H * q.H);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A[i * 3 + j] = dphi * q.ginv[i][j];
    }
  }
  return out;
}

}  // namespace

IdentityResiduals check_evolution_identities(const FlowConfig& cfg,
                                             const std::vector<GraphState>& window) {
  if (window.size() != 5) throw ConfigError("identity check needs five snapshots");
  const double h = window[3].t - window[2].t;
  if (!(h > 0.0)) throw ConfigError("snapshots must advance in time");
  for (int k = 0; k < 4; ++k)
    if (std::abs((window[k + 1].t - window[k].t) - h) > 1e-9 * h)
      throw ConfigError("snapshots are not equally spaced in time");

  const AmbientModel& model = *cfg.model;
  std::vector<HypersurfaceGeometry> geo(5);
  std::vector<SpeedField> spd;
  for (int k = 0; k < 5; ++k) {
    compute_geometry(model, window[k], geo[k]);
    spd.push_back(physical_speed(cfg, window[k], geo[k]));
  }
  const HypersurfaceGeometry& c = geo[2];
  const SpeedField& sc = spd[2];
  const SpatialGrid& grid = c.grid;
  const int n = c.n, D = n + 1, sigma = c.sigma;
  const std::size_t np = grid.size();
  auto dt5 = [&](auto get) {
    return ((get(0) - get(4)) + 8.0 * (get(3) - get(1))) / (12.0 * h);
  };

  // Spatial derivatives at the center.
  const IntrinsicChristoffel ic = intrinsic_christoffel(c);
  Field f(np), d, tmp;
  std::vector<std::array<double, 3>> W(np);
  for (std::size_t p = 0; p < np; ++p)
    for (int i = 0; i < 3; ++i) W[p][i] = (i < n) ? -sigma * sc.G[p] * c.pts[p].nu[i + 1] : 0.0;
  // dW[p][k*3+i] = ∂_k W^i, dg/dh[p][k*9+i*3+j], dnu[p][k*4+a], dG[p][k], ddG[p][i*3+j]
  std::vector<std::array<double, 9>> dW(np);
  std::vector<std::array<double, 27>> dg(np), dh(np);
  std::vector<std::array<double, 12>> dnu(np);
  std::vector<std::array<double, 3>> dG(np);
  std::vector<std::array<double, 9>> ddG(np);
  for (int i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < np; ++p) f[p] = W[p][i];
    for (int k = 0; k < n; ++k) {
      grid_d1(grid, f, d, k);
      for (std::size_t p = 0; p < np; ++p) dW[p][k * 3 + i] = d[p];
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      for (int which = 0; which < 2; ++which) {
        for (std::size_t p = 0; p < np; ++p) f[p] = which ? c.pts[p].h[i][j] : c.pts[p].g[i][j];
        auto& dst = which ? dh : dg;
        for (int k = 0; k < n; ++k) {
          grid_d1(grid, f, d, k);
          for (std::size_t p = 0; p < np; ++p) dst[p][k * 9 + i * 3 + j] = dst[p][k * 9 + j * 3 + i] = d[p];
        }
      }
    }
  for (int a = 0; a < D; ++a) {
    for (std::size_t p = 0; p < np; ++p) f[p] = c.pts[p].nu[a];
    for (int k = 0; k < n; ++k) {
      grid_d1(grid, f, d, k);
      for (std::size_t p = 0; p < np; ++p) dnu[p][k * 4 + a] = d[p];
    }
  }
  for (int k = 0; k < n; ++k) {
    grid_d1(grid, sc.G, d, k);
    for (std::size_t p = 0; p < np; ++p) dG[p][k] = d[p];
    for (int l = k; l < n; ++l) {
      grid_d11(grid, sc.G, d, k, l, tmp);
      for (std::size_t p = 0; p < np; ++p) ddG[p][k * 3 + l] = ddG[p][l * 3 + k] = d[p];
    }
  }

  IdentityResiduals res;
  IdentityResiduals scale;
  auto track = [](double& r, double& s, double lhs, double rhs) {
    r = std::max(r, std::abs(lhs - rhs));
    s = std::max(s, std::max(std::abs(lhs), std::abs(rhs)));
  };
  for (std::size_t p = 0; p < np; ++p) {
    const PointGeometry& q = c.pts[p];
    const double G = sc.G[p];
    const STPoint x = q.position(grid, p);
    const CurvatureTensors amb = riemann_at(model, x);
    double X[3][4];
    for (int i = 0; i < n; ++i) q.tangent(i, X[i]);
    // R̄(ν, x_i, ν, x_j)
    double Rn[3][3] = {};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b)
            for (int e = 0; e < D; ++e)
              for (int l = 0; l < D; ++l)
                acc += amb.riemann[a][b][e][l] * q.nu[a] * X[i][b] * q.nu[e] * X[j][l];
        Rn[i][j] = acc;
      }
    double hh[3][3] = {};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) hh[i][j] += q.hmix[k][i] * q.h[k][j];
    double Gcov[3][3];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double r = ddG[p][i * 3 + j];
        for (int k = 0; k < n; ++k) r -= ic.at(p, k, i, j) * dG[p][k];
        Gcov[i][j] = r;
      }

    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        // Lie derivatives along W of the symmetric tensors g and h.
        double Lg = 0.0, Lh = 0.0;
        for (int k = 0; k < n; ++k) {
          Lg += W[p][k] * dg[p][k * 9 + i * 3 + j] + q.g[k][j] * dW[p][i * 3 + k] +
                q.g[i][k] * dW[p][j * 3 + k];
          Lh += W[p][k] * dh[p][k * 9 + i * 3 + j] + q.h[k][j] * dW[p][i * 3 + k] +
                q.h[i][k] * dW[p][j * 3 + k];
        }
        const double gdot = dt5([&](int k) { return geo[k].pts[p].g[i][j]; }) + Lg;
        const double hdot = dt5([&](int k) { return geo[k].pts[p].h[i][j]; }) + Lh;
        track(res.metric, scale.metric, gdot, -2.0 * sigma * G * q.h[i][j]);
        const double hrhs = Gcov[i][j] - sigma * G * hh[i][j] + sigma * G * Rn[i][j];
        track(res.second, scale.second, hdot, hrhs);
      }

    for (int a = 0; a < D; ++a) {
      double nudot = dt5([&](int k) { return geo[k].pts[p].nu[a]; });
      for (int k = 0; k < n; ++k) nudot += W[p][k] * dnu[p][k * 4 + a];
      for (int b = 0; b < D; ++b)
        for (int e = 0; e < D; ++e)
          nudot += amb.christoffel.G[a][b][e] * q.nu[b] * (-sigma * G * q.nu[e]);
      double rhs_nu = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rhs_nu += q.ginv[i][j] * dG[p][j] * X[i][a];
      track(res.normal, scale.normal, nudot, rhs_nu);
      scale.normal = std::max(scale.normal, std::abs(q.nu[a]));
    }

    double Gdot = dt5([&](int k) { return spd[k].G[p]; });
    for (int k = 0; k < n; ++k) Gdot += W[p][k] * dG[p][k];
    double lap = 0.0, pot = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double A = sc.PhiFij[p][i * 3 + j];
        lap += A * Gcov[i][j];
        pot += A * (hh[i][j] + Rn[i][j]);
      }
    const double Grhs = lap + sigma * G * (pot + sc.ftilde_nu[p]);
    track(res.speed, scale.speed, Gdot, Grhs);
    scale.speed = std::max(scale.speed, std::abs(G));
  }
  auto rel = [](double r, double s) { return s > 0.0 ? r / s : r; };
  res.metric = rel(res.metric, scale.metric);
  res.normal = rel(res.normal, scale.normal);
  res.second = rel(res.second, scale.second);
  res.speed = rel(res.speed, scale.speed);
  return res;
}

IdentityResiduals check_evolution_identities(const FlowRun& run, std::size_t t_index) {
  if (t_index < 2 || t_index + 2 >= run.snapshots.size())
    throw ConfigError("identity check needs two snapshots on each side of the center");
  std::vector<GraphState> w(run.snapshots.begin() + static_cast<std::ptrdiff_t>(t_index - 2),
                            run.snapshots.begin() + static_cast<std::ptrdiff_t>(t_index + 3));
  return check_evolution_identities(run.config, w);
}

// ─── Run-level diagnostics ─────────────────────────────────────────

VelocitySign check_velocity_sign(const FlowRun& run, double tol_sign) {
  VelocitySign v;
  if (run.series.empty()) return v;
  const MonitorRow& first = run.series.front();
  int sign = 0;
  if (first.inf_velocity >= -tol_sign)
    sign = 1;
  else if (first.sup_velocity <= tol_sign)
    sign = -1;
  if (sign == 0) {
    v.min_over_run = first.inf_velocity;
    return v;
  }
  v.preserved = true;
  v.strict_positivity_of_integral = true;
  v.min_over_run = std::numeric_limits<double>::infinity();
  for (const auto& row : run.series) {
    const double worst = sign > 0 ? row.inf_velocity : -row.sup_velocity;
    v.min_over_run = std::min(v.min_over_run, worst);
    if (worst < -tol_sign) v.preserved = false;
    if (!(sign * row.integral_velocity > 0.0)) v.strict_positivity_of_integral = false;
  }
  // The terminal converged state has a vanishing integral up to roundoff.
  if (!v.strict_positivity_of_integral && run.verdict == Verdict::Converged) {
    bool before_end = true;
    for (std::size_t k = 0; k + 1 < run.series.size(); ++k)
      if (!(sign * run.series[k].integral_velocity > 0.0)) before_end = false;
    v.strict_positivity_of_integral = before_end && run.series.size() > 1;
  }
  return v;
}

double log_det_relation_residual(const AmbientModel& model, double tau0, double tau1) {
  const int n = model.n();
  SpatialGrid grid{n, 32, model.period()};
  const std::size_t np = grid.size();
  const std::size_t samples[3] = {0, np / 3 + 5, (2 * np) / 3 + 11};
  double worst = 0.0;
  HypersurfaceGeometry geom;
  for (std::size_t p : samples) {
    const auto x = grid.point(p);
    auto logdet = [&](double tau) {
      const MetricComponents m = metric_at(model, STPoint{tau, x[0], x[1], x[2]});
      double s[4][4] = {};
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s[i][j] = m.g[i + 1][j + 1];
      return std::log(smallmat::det(n, s));
    };
    auto integrand = [&](double tau) {
      compute_geometry(model, constant_state(grid, tau), geom);
      return 2.0 * std::exp(geom.pts[p].psi) * geom.pts[p].H;
    };
    double err = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, tau0, tau1, 12, 1e-13, &err);
    worst = std::max(worst, std::abs((logdet(tau0) - logdet(tau1)) - integral));
  }
  return worst;
}

ImcfDiagnostics imcf_diagnostics(const FlowRun& run) {
  ImcfDiagnostics d;
  const auto& s = run.series;
  if (s.size() < 2) return d;
  const int n = run.final_state.grid.n;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto& row : s) {
    const double y = std::log(row.volume);
    st += row.t;
    sy += y;
    stt += row.t * row.t;
    sty += row.t * y;
  }
  const double m = static_cast<double>(s.size());
  d.volume_decay_slope = (m * sty - st * sy) / (m * stt - st * st);
  const double V0 = s.front().volume;
  for (const auto& row : s) {
    const double tau = 1.0 - std::exp(-row.t / n);
    d.tau.push_back(tau);
    const double pred = V0 * std::pow(1.0 - tau, n);
    d.tau_volume_error = std::max(d.tau_volume_error, std::abs(row.volume - pred) / pred);
  }
  auto mean = [](const Field& u) {
    double a = 0.0;
    for (double x : u) a += x;
    return a / static_cast<double>(u.size());
  };
  const double t0 = mean(run.snapshots.front().u), t1 = mean(run.final_state.u);
  if (t1 > t0) d.log_g_relation_residual = log_det_relation_residual(*run.config.model, t0, t1);
  return d;
}

StrongDecayReport check_strong_volume_decay(const AmbientModel& model,
                                            const std::vector<double>& tau_grid, double c,
                                            int decades) {
  StrongDecayReport r;
  if (tau_grid.empty()) return r;
  const int n = model.n();
  SpatialGrid grid{n, 32, model.period()};
  HypersurfaceGeometry geom;
  r.min_ratio = std::numeric_limits<double>::infinity();
  for (double tau : tau_grid) {
    compute_geometry(model, constant_state(grid, tau), geom);
    const double phi = c / (-tau);
    for (const auto& q : geom.pts) {
      if (!(q.H > 0.0)) {
        r.verdict = DecayVerdict::NotApplicable;
        r.min_ratio = 0.0;
        return r;
      }
      r.min_ratio = std::min(r.min_ratio, std::exp(q.psi) * q.H / phi);
    }
  }
  const double tau0 = *std::min_element(tau_grid.begin(), tau_grid.end());
  auto phi = [&](double tau) { return c / (-tau); };
  r.partial_sums.push_back(0.0);
  double acc = 0.0;
  for (int k = 1; k <= decades; ++k) {
    const double a = tau0 * std::pow(10.0, -(k - 1)), b = tau0 * std::pow(10.0, -k);
    acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(phi, a, b, 15, 1e-14);
    r.partial_sums.push_back(acc);
  }
  r.unbounded = decades >= 2;
  for (int k = 1; 2 * k <= decades; ++k)
    if (!(r.partial_sums[2 * k] >= 2.0 * r.partial_sums[k] * (1.0 - 1e-2))) r.unbounded = false;
  r.verdict = (r.min_ratio >= 1.0 && r.unbounded) ? DecayVerdict::Holds : DecayVerdict::Fails;
  return r;
}

double c2_growth_after_first_quartile(const FlowRun& run) {
  const auto& s = run.series;
  if (s.size() < 4) return 0.0;
  const double tq = s.front().t + 0.25 * (s.back().t - s.front().t);
  std::size_t k = 0;
  while (k < s.size() && s[k].t < tq) ++k;
  if (k >= s.size()) return 0.0;
  const double base = s[k].c2_norm;
  double peak = base;
  for (std::size_t j = k; j < s.size(); ++j) peak = std::max(peak, s[j].c2_norm);
  return peak / base - 1.0;
}

}  // namespace flowlab
