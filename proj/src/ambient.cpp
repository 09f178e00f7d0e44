#include "flowlab/ambient.hpp"

#include <cmath>
#include <numbers>

#include "flowlab/errors.hpp"
#include "flowlab/smallmat.hpp"

namespace flowlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void set_flat_sigma(int n, LocalData& d) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d.sig[i][j] = (i == j) ? 1.0 : 0.0;
}

class Minkowski final : public AmbientModel {
 public:
  Minkowski(int n, int sigma) : AmbientModel("minkowski", n, sigma, -kInf, kInf, 1.0) {}
  void local(const STPoint&, LocalData& d) const override {
    d = LocalData{};
    set_flat_sigma(n(), d);
  }
  bool constant_curvature(double* K) const override {
    if (K) *K = 0.0;
    return true;
  }
};

// ψ = -log x⁰ on x⁰ > 0: contracting half of de Sitter space with flat slices.
class DeSitterFlat final : public AmbientModel {
 public:
  explicit DeSitterFlat(int n) : AmbientModel("de_sitter_conformal", n, -1, 0.0, kInf, 1.0) {}
  void local(const STPoint& p, LocalData& d) const override {
    d = LocalData{};
    const double t = p[0];
    d.psi = -std::log(t);
    d.dpsi[0] = -1.0 / t;
    d.ddpsi[0][0] = 1.0 / (t * t);
    set_flat_sigma(n(), d);
  }
  bool constant_curvature(double* K) const override {
    if (K) *K = 1.0;
    return true;
  }
};

// ψ = -log cos x⁰ on |x⁰| < π/2, n = 1: two-dimensional de Sitter space
// -dt² + cosh²t dθ² with a totally geodesic slice at x⁰ = 0.
class DeSitterClosed final : public AmbientModel {
 public:
  DeSitterClosed(int n, double period)
      : AmbientModel("de_sitter_conformal", n, -1, -std::numbers::pi / 2, std::numbers::pi / 2,
                     period) {}
  void local(const STPoint& p, LocalData& d) const override {
    d = LocalData{};
    const double c = std::cos(p[0]);
    d.psi = -std::log(c);
    d.dpsi[0] = std::tan(p[0]);
    d.ddpsi[0][0] = 1.0 / (c * c);
    set_flat_sigma(n(), d);
  }
  bool constant_curvature(double* K) const override {
    if (K) *K = 1.0;
    return true;
  }
};

// ψ = f(τ) + ε(-τ) Σ cos(2π x^i/L), σ_ij = δ_ij.
class Warped final : public AmbientModel {
 public:
  Warped(std::string label, int n, double tau_min, double period, WarpProfile warp, double eps,
         std::shared_ptr<ARWProfile> arw)
      : AmbientModel(std::move(label), n, -1, tau_min, 0.0, period),
        warp_(warp),
        eps_(eps),
        arw_(std::move(arw)) {}

  void local(const STPoint& p, LocalData& d) const override {
    d = LocalData{};
    const double tau = p[0];
    d.psi = warp_.f(tau);
    d.dpsi[0] = warp_.f1(tau);
    d.ddpsi[0][0] = warp_.f2(tau);
    if (eps_ != 0.0) {
      const double k = 2.0 * std::numbers::pi / period();
      double q = 0.0;
      for (int i = 0; i < n(); ++i) {
        const double c = std::cos(k * p[i + 1]), s = std::sin(k * p[i + 1]);
        q += c;
        d.dpsi[i + 1] = eps_ * (-tau) * (-k * s);
        d.ddpsi[0][i + 1] = d.ddpsi[i + 1][0] = -eps_ * (-k * s);
        d.ddpsi[i + 1][i + 1] = eps_ * (-tau) * (-k * k * c);
      }
      d.psi += eps_ * (-tau) * q;
      d.dpsi[0] += -eps_ * q;
    }
    set_flat_sigma(n(), d);
  }
  const ARWProfile* arw() const override { return arw_.get(); }

 private:
  WarpProfile warp_;
  double eps_;
  std::shared_ptr<ARWProfile> arw_;
};

// Riemannian ψ = power·log x⁰ on x⁰ > 0; power = -1 is hyperbolic space.
class WarpedRiemannian final : public AmbientModel {
 public:
  WarpedRiemannian(int n, double power)
      : AmbientModel("warped_riemannian", n, +1, 0.0, kInf, 1.0), power_(power) {}
  void local(const STPoint& p, LocalData& d) const override {
    d = LocalData{};
    const double t = p[0];
    d.psi = power_ * std::log(t);
    d.dpsi[0] = power_ / t;
    d.ddpsi[0][0] = -power_ / (t * t);
    set_flat_sigma(n(), d);
  }
  bool constant_curvature(double* K) const override {
    if (power_ != -1.0) return false;
    if (K) *K = -1.0;
    return true;
  }

 private:
  double power_;
};

// Generic non-Einstein test space with x-dependent ψ and a time-dependent σ_ij.
class Custom final : public AmbientModel {
 public:
  Custom(int n, int sigma, double period, double power, double bump, double aniso)
      : AmbientModel("custom", n, sigma, 0.0, kInf, period),
        power_(power),
        bump_(bump),
        aniso_(aniso) {}

  void local(const STPoint& p, LocalData& d) const override {
    d = LocalData{};
    const double t = p[0];
    const double k = 2.0 * std::numbers::pi / period();
    d.psi = power_ * std::log(t);
    d.dpsi[0] = power_ / t;
    d.ddpsi[0][0] = -power_ / (t * t);
    for (int i = 0; i < n(); ++i) {
      const double s = std::sin(k * p[i + 1]), c = std::cos(k * p[i + 1]);
      d.psi += bump_ * s;
      d.dpsi[i + 1] = bump_ * k * c;
      d.ddpsi[i + 1][i + 1] = -bump_ * k * k * s;
    }
    const double s1 = std::sin(k * p[1]), c1 = std::cos(k * p[1]);
    const double diag = std::exp(2.0 * aniso_ * s1);
    const double xl = p[n()];
    const double w = t / (1.0 + t);
    const double off = 0.3 * aniso_ * w * std::cos(k * xl);
    for (int i = 0; i < n(); ++i)
      for (int j = 0; j < n(); ++j) {
        if (i == j) {
          d.sig[i][j] = diag;
          d.dsig[1][i][j] = 2.0 * aniso_ * k * c1 * diag;
        } else {
          d.sig[i][j] = off;
          d.dsig[0][i][j] = 0.3 * aniso_ * std::cos(k * xl) / ((1.0 + t) * (1.0 + t));
          d.dsig[n()][i][j] += -0.3 * aniso_ * w * k * std::sin(k * xl);
        }
      }
  }

 private:
  double power_, bump_, aniso_;
};

class ConformalView final : public AmbientModel {
 public:
  explicit ConformalView(ModelPtr base)
      : AmbientModel(base->label() + "_conformal", base->n(), base->sigma(), base->time_min(),
                     base->time_max(), base->period()),
        base_(std::move(base)) {}
  void local(const STPoint& p, LocalData& d) const override {
    base_->local(p, d);
    d.psi = 0.0;
    for (int a = 0; a < 4; ++a) {
      d.dpsi[a] = 0.0;
      for (int b = 0; b < 4; ++b) d.ddpsi[a][b] = 0.0;
    }
  }

 private:
  ModelPtr base_;
};

class Mirrored final : public AmbientModel {
 public:
  explicit Mirrored(ModelPtr base)
      : AmbientModel(base->label() + "_mirrored", base->n(), base->sigma(), -base->time_max(),
                     -base->time_min(), base->period()),
        base_(std::move(base)) {}
  void local(const STPoint& p, LocalData& d) const override {
    STPoint q = p;
    q[0] = -p[0];
    base_->local(q, d);
    d.dpsi[0] = -d.dpsi[0];
    for (int a = 1; a < 4; ++a) {
      d.ddpsi[0][a] = -d.ddpsi[0][a];
      d.ddpsi[a][0] = -d.ddpsi[a][0];
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) d.dsig[0][i][j] = -d.dsig[0][i][j];
  }
  bool constant_curvature(double* K) const override { return base_->constant_curvature(K); }
  bool einstein() const override { return base_->einstein(); }

 private:
  ModelPtr base_;
};

}  // namespace

double WarpProfile::f(double tau) const {
  const double x = -tau;
  double r = std::log(c0) + p * std::log(x);
  if (beta != 0.0) r += std::log1p(beta * std::pow(x, kappa));
  return r;
}

double WarpProfile::f1(double tau) const {
  const double x = -tau;
  double q = p / x;
  if (beta != 0.0) {
    const double xk = std::pow(x, kappa);
    q += beta * kappa * xk / (x * (1.0 + beta * xk));
  }
  return -q;
}

double WarpProfile::f2(double tau) const {
  const double x = -tau;
  double r = -p / (x * x);
  if (beta != 0.0) {
    const double xk = std::pow(x, kappa);
    const double den = 1.0 + beta * xk;
    r += beta * kappa * (xk / (x * x)) * ((kappa - 1.0) - beta * xk) / (den * den);
  }
  return r;
}

ARWProfile ARWProfile::make(int n, double omega, double c0, double beta, double kappa) {
  ARWProfile a;
  a.n = n;
  a.omega = omega;
  a.gamma_tilde = 0.5 * (n + omega - 2.0);
  if (!(a.gamma_tilde > 0.0)) throw DomainError("arw_power requires n + omega - 2 > 0");
  a.gamma = a.gamma_tilde / n;
  a.warp.c0 = c0;
  a.warp.p = 1.0 / a.gamma_tilde;
  a.warp.beta = beta;
  a.warp.kappa = std::isnan(kappa) ? 2.0 * a.gamma_tilde : kappa;
  a.mass = std::pow(c0, 2.0 * a.gamma_tilde) / (a.gamma_tilde * a.gamma_tilde);
  return a;
}

void AmbientModel::check_domain(const STPoint& p) const {
  if (!(p[0] > tmin_ && p[0] < tmax_))
    throw DomainError("x0 = " + std::to_string(p[0]) + " outside the time range of " + label_);
}

ModelPtr make_model(const ModelParams& m) {
  if (m.n < 1 || m.n > kMaxDim) throw DomainError("n must lie in 1..3");
  if (m.label == "minkowski") {
    if (m.sigma != 1 && m.sigma != -1) throw DomainError("sigma must be +1 or -1");
    return std::make_shared<Minkowski>(m.n, m.sigma);
  }
  if (m.label == "de_sitter_conformal") {
    if (m.slicing == "flat") return std::make_shared<DeSitterFlat>(m.n);
    if (m.slicing == "closed") {
      if (m.n != 1) throw DomainError("closed de Sitter slicing needs n = 1");
      return std::make_shared<DeSitterClosed>(m.n, m.period);
    }
    throw DomainError("unknown de Sitter slicing '" + m.slicing + "'");
  }
  if (m.label == "robertson_walker") {
    WarpProfile w;
    w.c0 = m.c0;
    w.p = m.p;
    return std::make_shared<Warped>(m.label, m.n, m.tau_min, m.period, w, 0.0, nullptr);
  }
  if (m.label == "arw_power") {
    auto a = std::make_shared<ARWProfile>(ARWProfile::make(m.n, m.omega, m.c0, m.beta, m.kappa));
    return std::make_shared<Warped>(m.label, m.n, m.tau_min, m.period, a->warp, m.eps, a);
  }
  if (m.label == "warped_riemannian") return std::make_shared<WarpedRiemannian>(m.n, m.power);
  if (m.label == "custom") {
    if (m.sigma != 1 && m.sigma != -1) throw DomainError("sigma must be +1 or -1");
    return std::make_shared<Custom>(m.n, m.sigma, m.period, m.power, m.bump, m.aniso);
  }
  throw DomainError("unknown model label '" + m.label + "'");
}

ModelPtr conformal_view(const ModelPtr& model) { return std::make_shared<ConformalView>(model); }
ModelPtr mirrored(const ModelPtr& model) { return std::make_shared<Mirrored>(model); }

MetricComponents metric_at(const AmbientModel& model, const STPoint& p) {
  model.check_domain(p);
  LocalData d;
  model.local(p, d);
  const int n = model.n();
  MetricComponents m;
  m.dim = n + 1;
  const double e2 = std::exp(2.0 * d.psi);
  m.g[0][0] = model.sigma() * e2;
  m.ginv[0][0] = model.sigma() / e2;
  double s[4][4] = {}, si[4][4];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s[i][j] = d.sig[i][j];
  smallmat::invert(n, s, si);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.g[i + 1][j + 1] = e2 * s[i][j];
      m.ginv[i + 1][j + 1] = si[i][j] / e2;
    }
  return m;
}

Christoffel christoffel_from_local(int n, int sigma, const LocalData& d) {
  const int D = n + 1;
  const double e2 = std::exp(2.0 * d.psi);
  double s[4][4] = {}, si[4][4] = {};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s[i][j] = d.sig[i][j];
  if (n == 1) {
    si[0][0] = 1.0 / s[0][0];
  } else {
    smallmat::invert(n, s, si);
  }
  // dg[c][a][b] = ∂_c ḡ_ab; the metric is block diagonal.
  double dg[4][4][4] = {};
  for (int c = 0; c < D; ++c) {
    dg[c][0][0] = 2.0 * sigma * d.dpsi[c] * e2;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        dg[c][i + 1][j + 1] = e2 * (2.0 * d.dpsi[c] * s[i][j] + d.dsig[c][i][j]);
  }
  double gi[4][4] = {};
  gi[0][0] = sigma / e2;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gi[i + 1][j + 1] = si[i][j] / e2;
  Christoffel G;
  G.dim = D;
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = b; c < D; ++c) {
        double acc = 0.0;
        const int lo = (a == 0) ? 0 : 1, hi = (a == 0) ? 1 : D;
        for (int e = lo; e < hi; ++e)
          acc += gi[a][e] * (dg[b][e][c] + dg[c][e][b] - dg[e][b][c]);
        G.G[a][b][c] = G.G[a][c][b] = 0.5 * acc;
      }
  return G;
}

Christoffel christoffel_at(const AmbientModel& model, const STPoint& p) {
  model.check_domain(p);
  LocalData d;
  model.local(p, d);
  return christoffel_from_local(model.n(), model.sigma(), d);
}

namespace {

void finish_tensors(const MetricComponents& m, CurvatureTensors& T) {
  const int D = T.dim;
  for (int b = 0; b < D; ++b)
    for (int d = 0; d < D; ++d) {
      double acc = 0.0;
      for (int a = 0; a < D; ++a)
        for (int c = 0; c < D; ++c) acc += m.ginv[a][c] * T.riemann[a][b][c][d];
      T.ricci[b][d] = acc;
    }
}

}  // namespace

CurvatureTensors riemann_fd(const AmbientModel& model, const STPoint& p, double h) {
  const int D = model.n() + 1;
  CurvatureTensors T;
  T.dim = D;
  T.christoffel = christoffel_at(model, p);
  const auto& G = T.christoffel.G;
  // dG[c][a][b][d] = ∂_c Γ̄^a_bd
  static thread_local double dG[4][4][4][4];
  for (int c = 0; c < D; ++c) {
    Christoffel s[4];
    const double off[4] = {-2.0, -1.0, 1.0, 2.0};
    for (int k = 0; k < 4; ++k) {
      STPoint q = p;
      q[c] += off[k] * h;
      s[k] = christoffel_at(model, q);
    }
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        for (int d = 0; d < D; ++d)
          dG[c][a][b][d] = ((s[0].G[a][b][d] - s[3].G[a][b][d]) +
                            8.0 * (s[2].G[a][b][d] - s[1].G[a][b][d])) /
                           (12.0 * h);
  }
  const MetricComponents m = metric_at(model, p);
  double Rup[4][4][4][4];  // R^a_bcd = ∂_c Γ^a_db - ∂_d Γ^a_cb + Γ^a_ce Γ^e_db - Γ^a_de Γ^e_cb
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = 0; c < D; ++c)
        for (int d = 0; d < D; ++d) {
          double r = dG[c][a][d][b] - dG[d][a][c][b];
          for (int e = 0; e < D; ++e) r += G[a][c][e] * G[e][d][b] - G[a][d][e] * G[e][c][b];
          Rup[a][b][c][d] = r;
        }
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = 0; c < D; ++c)
        for (int d = 0; d < D; ++d) {
          double r = 0.0;
          for (int e = 0; e < D; ++e) r += m.g[a][e] * Rup[e][b][c][d];
          T.riemann[a][b][c][d] = r;
        }
  finish_tensors(m, T);
  return T;
}

CurvatureTensors riemann_at(const AmbientModel& model, const STPoint& p) {
  double K = 0.0;
  if (!model.constant_curvature(&K)) return riemann_fd(model, p);
  const int D = model.n() + 1;
  CurvatureTensors T;
  T.dim = D;
  T.christoffel = christoffel_at(model, p);
  const MetricComponents m = metric_at(model, p);
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = 0; c < D; ++c)
        for (int d = 0; d < D; ++d)
          T.riemann[a][b][c][d] = K * (m.g[a][c] * m.g[b][d] - m.g[a][d] * m.g[b][c]);
  finish_tensors(m, T);
  return T;
}

namespace {

double min_eig_shifted(int D, const double chi[4][4], const double g[4][4], double c) {
  double a[4][4];
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) a[i][j] = chi[i][j] - c * g[i][j];
  return smallmat::min_eigenvalue(D, a);
}

// Largest c with χ - c ḡ positive semidefinite; -inf if no such c exists.
// λ_min(χ - c ḡ) is concave in c, so the feasible set is an interval.
double largest_c(int D, const double chi[4][4], const double g[4][4]) {
  double scale = 0.0, gmin = kInf;
  for (int i = 0; i < D; ++i) {
    gmin = std::min(gmin, std::abs(g[i][i]));
    for (int j = 0; j < D; ++j) scale = std::max(scale, std::abs(chi[i][j]));
  }
  const double B = 4.0 * (scale + 1e-300) / gmin + 1.0;
  double lo = -B, hi = B;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (min_eig_shifted(D, chi, g, m1) < min_eig_shifted(D, chi, g, m2))
      lo = m1;
    else
      hi = m2;
  }
  const double cstar = 0.5 * (lo + hi);
  const double top = min_eig_shifted(D, chi, g, cstar);
  if (top < -1e-14 * (scale + 1.0)) return -kInf;
  double a = cstar, b = B;
  if (min_eig_shifted(D, chi, g, b) >= 0.0) return b;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (min_eig_shifted(D, chi, g, mid) >= 0.0)
      a = mid;
    else
      b = mid;
  }
  return a;
}

}  // namespace

ConvexChiResult convex_chi(const AmbientModel& model, double t0, double t1, int nt,
                           const std::vector<std::array<double, 3>>& xs, double lambda) {
  const int n = model.n(), D = n + 1;
  ConvexChiResult res;
  res.c = kInf;
  double ref = 0.0;
  for (int k = 0; k < nt; ++k) {
    const double t = (nt == 1) ? t0 : t0 + (t1 - t0) * k / (nt - 1);
    for (const auto& x : xs) {
      STPoint p{t, x[0], x[1], x[2]};
      const MetricComponents m = metric_at(model, p);
      const Christoffel G = christoffel_at(model, p);
      const double el = std::exp(lambda * t);
      double chi[4][4];
      // t_α = δ^0_α and t_αβ = -Γ̄^0_αβ for the time function t = x⁰.
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) {
          const double tt = (a == 0 && b == 0) ? 1.0 : 0.0;
          chi[a][b] = el * (lambda * lambda * tt - lambda * G.G[0][a][b]);
        }
      res.c = std::min(res.c, largest_c(D, chi, m.g));
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) ref = std::max(ref, std::abs(chi[a][b]) / std::abs(m.g[a][a]));
    }
  }
  // c = 0 is the degenerate boundary case; resolve it relative to |χ|.
  res.is_convex = res.c > 1e-10 * ref;
  return res;
}

}  // namespace flowlab
