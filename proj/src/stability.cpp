#include "flowlab/stability.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "flowlab/errors.hpp"
#include "flowlab/smallmat.hpp"

namespace flowlab {

std::string to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::Stable: return "Stable";
    case StabilityVerdict::Marginal: return "Marginal";
    case StabilityVerdict::Unstable: return "Unstable";
    case StabilityVerdict::Unclassified: return "Unclassified";
    case StabilityVerdict::NotApplicable: return "NotApplicable";
  }
  return "?";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct Neighbors {
  const SpatialGrid& grid;
  std::size_t stride(int a) const {
    std::size_t s = 1;
    for (int i = 0; i < a; ++i) s *= static_cast<std::size_t>(grid.N);
    return s;
  }
  std::size_t at(std::size_t p, int a, int off) const {
    const std::size_t s = stride(a);
    const int m = static_cast<int>((p / s) % grid.N);
    const int mm = ((m + off) % grid.N + grid.N) % grid.N;
    return p + (static_cast<std::ptrdiff_t>(mm) - m) * static_cast<std::ptrdiff_t>(s);
  }
};

ModelPtr borrow(const AmbientModel& model) {
  return ModelPtr(&model, [](const AmbientModel*) {});
}

FlowConfig generic_config(const AmbientModel& model, const CurvatureSpec& spec,
                          const ForcingSpec& forcing) {
  FlowConfig cfg;
  cfg.model = borrow(model);
  cfg.curvature = spec;
  cfg.forcing = forcing;
  cfg.mode = FlowMode::Generic;
  return cfg;
}

}  // namespace

LinearizedOperator assemble(const AmbientModel& model, const GraphState& state,
                            const CurvatureSpec& spec, const ForcingSpec& forcing,
                            bool force_nondivergence) {
  const HypersurfaceGeometry geom = compute_geometry(model, state);
  const SpatialGrid& grid = geom.grid;
  const int n = geom.n, D = n + 1, sigma = geom.sigma;
  const std::size_t np = grid.size();
  const double h = grid.dx();

  LinearizedOperator op;
  op.grid = grid;
  op.n = n;
  op.sigma = sigma;
  const ClassDReport cd = check_class_D(spec, model, geom);
  op.class_d = cd.qualifies;
  op.class_d_residual = cd.residual;
  op.divergence_form = cd.qualifies && !force_nondivergence;
  op.mu.resize(np);
  op.c.resize(np);
  op.sqrt_g.resize(np);
  op.phidot.resize(np);

  std::vector<std::array<double, 9>> A(np);  // √g F^{ij}
  CurvatureValues cv;
  for (std::size_t p = 0; p < np; ++p) {
    const PointGeometry& q = geom.pts[p];
    eval_point(spec, n, q, p, cv, true);
    if (!(cv.dPhi > 0.0)) throw AssemblyError("Phi is not increasing at point " + std::to_string(p));
    double Fm[4][4] = {};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Fm[i][j] = cv.Fij[i][j];
        A[p][i * 3 + j] = q.sqrt_g * cv.Fij[i][j];
      }
    if (!(smallmat::min_eigenvalue(n, Fm) > 0.0))
      throw AssemblyError("ellipticity lost at point " + std::to_string(p));
    op.phidot[p] = cv.dPhi;
    op.sqrt_g[p] = q.sqrt_g;
    op.mu[p] = q.sqrt_g / cv.dPhi;

    const STPoint x = q.position(grid, p);
    const CurvatureTensors amb = riemann_at(model, x);
    double X[3][4];
    for (int i = 0; i < n; ++i) q.tangent(i, X[i]);
    double pot = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double hh = 0.0;
        for (int k = 0; k < n; ++k) hh += q.hmix[k][i] * q.h[k][j];
        double Rn = 0.0;
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b)
            for (int e = 0; e < D; ++e)
              for (int l = 0; l < D; ++l)
                Rn += amb.riemann[a][b][e][l] * q.nu[a] * X[i][b] * q.nu[e] * X[j][l];
        pot += cv.dPhi * cv.Fij[i][j] * (hh + Rn);
      }
    const double f = forcing.value(x, n, grid.L);
    double df[4];
    forcing.gradient(x, n, grid.L, df);
    const double dft = (spec.phi == PhiKind::Identity) ? 1.0 : spec.dPhi(f, n);
    for (int a = 0; a < D; ++a) pot += dft * df[a] * q.nu[a];
    op.c[p] = sigma * pot;
  }

  const Neighbors nb{grid};
  std::vector<Triplet> trip;
  const double c1 = 1.0 / (12.0 * h);
  const int off4[4] = {-2, -1, 1, 2};
  const double w1[4] = {c1, -8.0 * c1, 8.0 * c1, -c1};
  if (op.divergence_form) {
    const double cs = 1.0 / (24.0 * h);
    const int offs[4] = {-1, 0, 1, 2};
    const double ws[4] = {cs, -27.0 * cs, 27.0 * cs, -cs};
    const double wi[4] = {-1.0 / 16, 9.0 / 16, 9.0 / 16, -1.0 / 16};
    trip.reserve(np * (16 * n + 32 * n * (n - 1) / 2));
    for (std::size_t p = 0; p < np; ++p) {
      for (int a = 0; a < n; ++a) {
        // Half node p + ½e_a.
        double ah = 0.0;
        std::size_t idx[4];
        for (int k = 0; k < 4; ++k) {
          idx[k] = nb.at(p, a, offs[k]);
          ah += wi[k] * A[idx[k]][a * 3 + a];
        }
        for (int r = 0; r < 4; ++r)
          for (int s = 0; s < 4; ++s) trip.emplace_back(idx[r], idx[s], ws[r] * ah * ws[s]);
      }
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          const double Aab = A[p][a * 3 + b];
          std::size_t ia[4], ib[4];
          for (int k = 0; k < 4; ++k) {
            ia[k] = nb.at(p, a, off4[k]);
            ib[k] = nb.at(p, b, off4[k]);
          }
          for (int r = 0; r < 4; ++r)
            for (int s = 0; s < 4; ++s) {
              const double v = w1[r] * Aab * w1[s];
              trip.emplace_back(ia[r], ib[s], v);
              trip.emplace_back(ib[s], ia[r], v);
            }
        }
    }
  } else {
    const IntrinsicChristoffel ic = intrinsic_christoffel(geom);
    const double c2 = 1.0 / (12.0 * h * h);
    const int off5[5] = {-2, -1, 0, 1, 2};
    const double w2[5] = {-c2, 16.0 * c2, -30.0 * c2, 16.0 * c2, -c2};
    for (std::size_t p = 0; p < np; ++p) {
      for (int a = 0; a < n; ++a) {
        for (int k = 0; k < 5; ++k) trip.emplace_back(p, nb.at(p, a, off5[k]), -A[p][a * 3 + a] * w2[k]);
        double first = 0.0;  // √g F^{ij} Γ^a_ij
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) first += A[p][i * 3 + j] * ic.at(p, a, i, j);
        for (int k = 0; k < 4; ++k) trip.emplace_back(p, nb.at(p, a, off4[k]), first * w1[k]);
        for (int b = a + 1; b < n; ++b)
          for (int r = 0; r < 4; ++r)
            for (int s = 0; s < 4; ++s)
              trip.emplace_back(p, nb.at(nb.at(p, a, off4[r]), b, off4[s]),
                                -2.0 * A[p][a * 3 + b] * w1[r] * w1[s]);
      }
    }
  }
  op.K.resize(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(np));
  op.K.setFromTriplets(trip.begin(), trip.end());
  const SpMat Kt = op.K.transpose();
  const double nrm = op.K.norm();
  op.asymmetry = nrm > 0.0 ? SpMat(op.K - Kt).norm() / nrm : 0.0;
  return op;
}

Field LinearizedOperator::apply(const Field& w) const {
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::VectorXd kw = K * wv;
  Field out(w.size());
  for (std::size_t p = 0; p < w.size(); ++p) out[p] = kw[static_cast<Eigen::Index>(p)] / mu[p] - c[p] * w[p];
  return out;
}

double LinearizedOperator::rayleigh(const Field& w) const {
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  double num = wv.dot(K * wv), den = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p) {
    num -= mu[p] * c[p] * w[p] * w[p];
    den += mu[p] * w[p] * w[p];
  }
  return num / den;
}

StabilityReport first_eigenpair(const LinearizedOperator& op) {
  const std::size_t np = op.mu.size();
  const auto N = static_cast<Eigen::Index>(np);
  StabilityReport rep;
  rep.heuristic = !op.divergence_form;
  double cmax = 0.0;
  for (double x : op.c) cmax = std::max(cmax, std::abs(x));
  rep.marginal_tol = 1e-6 * std::max(cmax, 1.0);

  // S = M^{-1/2} (K - diag(μc)) M^{-1/2}, symmetrized in the heuristic case.
  SpMat B = op.divergence_form ? op.K : SpMat(0.5 * (op.K + SpMat(op.K.transpose())));
  Eigen::VectorXd isq(N);
  for (Eigen::Index p = 0; p < N; ++p) isq[p] = 1.0 / std::sqrt(op.mu[static_cast<std::size_t>(p)]);
  SpMat S = isq.asDiagonal() * B * isq.asDiagonal();
  for (Eigen::Index p = 0; p < N; ++p) S.coeffRef(p, p) -= op.c[static_cast<std::size_t>(p)];
  S = SpMat(0.5 * (S + SpMat(S.transpose())));

  Eigen::VectorXd y;
  if (op.n == 1) {
    const Eigen::MatrixXd Sd(S);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sd);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    y = es.eigenvectors().col(0);
    rep.sweeps = 1;
  } else {
    double cpos = -std::numeric_limits<double>::infinity();
    for (double x : op.c) cpos = std::max(cpos, x);
    double gersh = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < S.outerSize(); ++k) {
      double diag = 0.0, off = 0.0;
      for (SpMat::InnerIterator it(S, k); it; ++it)
        (it.row() == it.col() ? diag : off) += (it.row() == it.col() ? it.value() : std::abs(it.value()));
      gersh = std::min(gersh, diag - off);
    }
    const double shifts[2] = {-cpos - 1.0, gersh - 1.0};
    bool done = false;
    for (double shift : shifts) {
      SpMat Ashift = S;
      for (Eigen::Index p = 0; p < N; ++p) Ashift.coeffRef(p, p) -= shift;
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
      cg.setTolerance(1e-14);
      cg.setMaxIterations(20 * static_cast<int>(N));
      cg.compute(Ashift);
      y = Eigen::VectorXd::Ones(N).normalized();
      double rq_prev = y.dot(S * y);
      bool ok = true;
      for (int sweep = 1; sweep <= 10000; ++sweep) {
        Eigen::VectorXd z = cg.solveWithGuess(y, y);
        if (cg.info() != Eigen::Success || !z.allFinite()) {
          ok = false;
          break;
        }
        y = z.normalized();
        const double rq = y.dot(S * y);
        rep.sweeps = sweep;
        if (std::abs(rq - rq_prev) < 1e-12 * std::max(1.0, std::abs(rq))) {
          done = true;
          break;
        }
        rq_prev = rq;
      }
      if (done) break;
      if (ok) throw NumericalError("inverse iteration stalled after 10000 sweeps");
    }
    if (!done) throw NumericalError("inner solves failed for every shift");
  }

  rep.eta.resize(np);
  double norm2 = 0.0, mean = 0.0;
  const double cell = op.grid.cell_volume();
  for (std::size_t p = 0; p < np; ++p) {
    rep.eta[p] = isq[static_cast<Eigen::Index>(p)] * y[static_cast<Eigen::Index>(p)];
    norm2 += rep.eta[p] * rep.eta[p] * op.sqrt_g[p] * cell;
    mean += rep.eta[p] * op.sqrt_g[p] * cell;
  }
  const double scale = (mean < 0.0 ? -1.0 : 1.0) / std::sqrt(norm2);
  rep.eta_min = std::numeric_limits<double>::infinity();
  rep.eta_max = -std::numeric_limits<double>::infinity();
  for (double& e : rep.eta) {
    e *= scale;
    rep.eta_min = std::min(rep.eta_min, e);
    rep.eta_max = std::max(rep.eta_max, e);
  }
  rep.positive_eta = rep.eta_min > 0.0;
  rep.lambda1 = y.dot(S * y);
  if (rep.heuristic)
    rep.verdict = StabilityVerdict::Unclassified;
  else if (rep.lambda1 > rep.marginal_tol)
    rep.verdict = StabilityVerdict::Stable;
  else if (rep.lambda1 >= -rep.marginal_tol)
    rep.verdict = StabilityVerdict::Marginal;
  else
    rep.verdict = StabilityVerdict::Unstable;
  return rep;
}

StabilityReport verify_limit_stability(const FlowRun& run) {
  StabilityReport rep;
  const FlowConfig& cfg = run.config;
  if (cfg.mode != FlowMode::Generic) {
    rep.note = "stability is defined for curvature flows with a forcing term";
    return rep;
  }
  if (run.verdict != Verdict::Converged) {
    rep.note = "run did not converge";
    return rep;
  }
  if (!run.series.empty() && std::max(std::abs(run.series.front().sup_velocity),
                                      std::abs(run.series.front().inf_velocity)) <= 1e-12) {
    rep.note = "initial hypersurface is already stationary";
    return rep;
  }
  if (!check_velocity_sign(run).preserved) {
    rep.note = "velocity changed sign during the run";
    return rep;
  }
  const LinearizedOperator op = assemble(*cfg.model, run.final_state, cfg.curvature, cfg.forcing);
  if (!op.class_d) {
    rep.note = "curvature function is not of class (D) on this model";
    return rep;
  }
  return first_eigenpair(op);
}

Field finite_difference_response(const AmbientModel& model, const GraphState& state,
                                 const CurvatureSpec& spec, const ForcingSpec& forcing,
                                 const Field& phi, double delta) {
  const FlowConfig cfg = generic_config(model, spec, forcing);
  GraphState plus = state, minus = state;
  for (std::size_t p = 0; p < phi.size(); ++p) {
    plus.u[p] += delta * phi[p];
    minus.u[p] -= delta * phi[p];
  }
  RhsEvaluation a, b;
  evaluate_rhs(cfg, plus, a, false);
  evaluate_rhs(cfg, minus, b, false);
  Field out(phi.size());
  for (std::size_t p = 0; p < phi.size(); ++p) out[p] = (a.G[p] - b.G[p]) / (2.0 * delta);
  return out;
}

Field linearized_response(const AmbientModel& model, const GraphState& state,
                          const CurvatureSpec& spec, const ForcingSpec& forcing,
                          const LinearizedOperator& op, const Field& phi) {
  const FlowConfig cfg = generic_config(model, spec, forcing);
  RhsEvaluation ev;
  evaluate_rhs(cfg, state, ev, false);
  const int n = ev.geom.n;
  const std::size_t np = phi.size();
  Field w(np);
  for (std::size_t p = 0; p < np; ++p) {
    const PointGeometry& q = ev.geom.pts[p];
    w[p] = std::exp(q.psi) / q.v * phi[p];
  }
  Field out = op.apply(w);
  Field d;
  for (int i = 0; i < n; ++i) {
    grid_d1(state.grid, ev.G, d, i);
    for (std::size_t p = 0; p < np; ++p) {
      const PointGeometry& q = ev.geom.pts[p];
      // T^i = σ v^{-2} u^i φ with u^i = -e^ψ v ν^i
      const double T = -op.sigma * std::exp(q.psi) / q.v * q.nu[i + 1] * phi[p];
      out[p] += T * d[p];
    }
  }
  return out;
}

namespace {

// Jacobian of u ↦ G(u) at a leaf where G is spatially constant.
SpMat leaf_jacobian(const LinearizedOperator& op, const HypersurfaceGeometry& geom) {
  const std::size_t np = op.mu.size();
  Eigen::VectorXd imu(static_cast<Eigen::Index>(np)), wscale(static_cast<Eigen::Index>(np));
  for (std::size_t p = 0; p < np; ++p) {
    imu[static_cast<Eigen::Index>(p)] = 1.0 / op.mu[p];
    wscale[static_cast<Eigen::Index>(p)] = std::exp(geom.pts[p].psi) / geom.pts[p].v;
  }
  SpMat L = imu.asDiagonal() * op.K;
  for (std::size_t p = 0; p < np; ++p)
    L.coeffRef(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) -= op.c[p];
  return L * wscale.asDiagonal();
}

}  // namespace

Foliation foliate(const AmbientModel& model, const GraphState& stationary,
                  const CurvatureSpec& spec, const ForcingSpec& forcing,
                  const FoliateOptions& opts) {
  const FlowConfig cfg = generic_config(model, spec, forcing);
  const LinearizedOperator op0 = assemble(model, stationary, spec, forcing);
  const StabilityReport rep = first_eigenpair(op0);
  if (rep.verdict == StabilityVerdict::Unstable)
    throw FoliateError("stationary hypersurface is unstable", 0.0);
  Foliation fol;
  fol.lambda1 = rep.lambda1;
  fol.bordered = opts.force_bordered || rep.verdict != StabilityVerdict::Stable;

  const std::size_t np = stationary.u.size();
  const auto N = static_cast<Eigen::Index>(np);
  const double cell = stationary.grid.cell_volume();
  Eigen::VectorXd b(N);  // η √g₀ cell, the constraint row
  for (std::size_t p = 0; p < np; ++p) b[static_cast<Eigen::Index>(p)] = rep.eta[p] * op0.sqrt_g[p] * cell;

  fol.leaves.push_back(Leaf{0.0, 0.0, stationary.u, 0});
  for (int side : {1, -1}) {
    GraphState cur = stationary;
    double tau = 0.0;
    double last_good = 0.0;
    for (int k = 1; k <= opts.leaves_per_side; ++k) {
      const double eps = side * k * opts.eps_step;
      bool converged = false;
      int it = 0;
      for (; it < opts.max_newton; ++it) {
        RhsEvaluation ev;
        try {
          evaluate_rhs(cfg, cur, ev, false);
        } catch (const std::exception& e) {
          throw FoliateError(std::string("leaf left the admissible set: ") + e.what(), last_good);
        }
        Eigen::VectorXd R(fol.bordered ? N + 1 : N);
        double rmax = 0.0;
        for (std::size_t p = 0; p < np; ++p) {
          R[static_cast<Eigen::Index>(p)] = ev.G[p] - (fol.bordered ? tau : eps);
          rmax = std::max(rmax, std::abs(R[static_cast<Eigen::Index>(p)]));
        }
        if (fol.bordered) {
          double con = -eps;
          for (std::size_t p = 0; p < np; ++p)
            con += b[static_cast<Eigen::Index>(p)] * (cur.u[p] - stationary.u[p]);
          R[N] = con;
          rmax = std::max(rmax, std::abs(con));
        }
        if (rmax < opts.tol) {
          converged = true;
          break;
        }
        const LinearizedOperator op = assemble(model, cur, spec, forcing);
        SpMat J = leaf_jacobian(op, ev.geom);
        if (fol.bordered) {
          std::vector<Triplet> t;
          t.reserve(static_cast<std::size_t>(J.nonZeros()) + 2 * np);
          for (Eigen::Index c = 0; c < J.outerSize(); ++c)
            for (SpMat::InnerIterator itr(J, c); itr; ++itr) t.emplace_back(itr.row(), itr.col(), itr.value());
          for (Eigen::Index p = 0; p < N; ++p) {
            t.emplace_back(p, N, -1.0);
            t.emplace_back(N, p, b[p]);
          }
          J.resize(N + 1, N + 1);
          J.setFromTriplets(t.begin(), t.end());
        }
        J.makeCompressed();
        Eigen::SparseLU<SpMat> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) throw FoliateError("singular Newton system", last_good);
        const Eigen::VectorXd dx = lu.solve(R);
        if (!dx.allFinite()) throw FoliateError("Newton step is not finite", last_good);
        for (std::size_t p = 0; p < np; ++p) cur.u[p] -= dx[static_cast<Eigen::Index>(p)];
        if (fol.bordered) tau -= dx[N];
      }
      if (!converged) throw FoliateError("Newton iteration did not converge", last_good);
      fol.leaves.push_back(Leaf{eps, fol.bordered ? tau : eps, cur.u, it});
      last_good = eps;
    }
  }
  std::sort(fol.leaves.begin(), fol.leaves.end(),
            [](const Leaf& a, const Leaf& b) { return a.eps < b.eps; });
  fol.ordered = true;
  for (std::size_t k = 0; k + 1 < fol.leaves.size(); ++k)
    for (std::size_t p = 0; p < np; ++p)
      if (!(fol.leaves[k + 1].u[p] > fol.leaves[k].u[p])) fol.ordered = false;
  fol.tau_sign_matches = true;
  for (const auto& l : fol.leaves)
    if (l.eps != 0.0 && !((l.tau > 0.0) == (l.eps > 0.0) && l.tau != 0.0)) fol.tau_sign_matches = false;
  return fol;
}

}  // namespace flowlab
