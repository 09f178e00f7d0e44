#include "flowlab/experiment.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "flowlab/arw.hpp"
#include "flowlab/errors.hpp"
#include "flowlab/stability.hpp"

#ifndef FLOWLAB_VERSION
#define FLOWLAB_VERSION "unknown"
#endif

extern char** environ;

namespace flowlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// JSON has no NaN; missing values become null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json num_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Table flow_table(const FlowRun& r) {
  Table t;
  t.columns = {"step",     "t",          "dt",           "volume",       "volume_prediction",
               "sup_velocity", "inf_velocity", "integral_velocity", "sup_dudt", "max_vtilde",
               "min_kappa", "max_kappa",  "u_min",        "u_max",        "c2_norm"};
  const bool imcf = r.config.mode != FlowMode::Generic;
  const double V0 = r.series.empty() ? kNaN : r.series.front().volume;
  for (const auto& row : r.series)
    t.rows.push_back({static_cast<double>(row.step), row.t, row.dt, row.volume,
                      imcf ? V0 * std::exp(-row.t) : kNaN, row.sup_velocity, row.inf_velocity,
                      row.integral_velocity, row.sup_dudt, row.max_vtilde, row.min_kappa, row.max_kappa,
                      row.u_min, row.u_max, row.c2_norm});
  return t;
}

bool finished(Verdict v) { return v == Verdict::Converged || v == Verdict::HorizonReached; }

void flow_summary(const FlowRun& r, json& s) {
  s["flow_verdict"] = to_string(r.verdict);
  s["flow_message"] = r.message;
  s["t_final"] = r.final_state.t;
  s["steps"] = r.series.empty() ? 0 : r.series.back().step;
  s["initial_vtilde"] = r.initial_vtilde;
  if (r.config.mode == FlowMode::Generic) {
    const VelocitySign vs = check_velocity_sign(r);
    s["velocity_sign_preserved"] = vs.preserved;
    s["velocity_min_over_run"] = num(vs.min_over_run);
    s["velocity_integral_positive"] = vs.strict_positivity_of_integral;
    s["max_monotone_increase"] = r.max_monotone_increase;
  }
  if (r.verdict == Verdict::Converged) s["c2_growth_after_first_quartile"] = num(c2_growth_after_first_quartile(r));
}

ExperimentResult flow_run(const ExperimentConfig& c) {
  ExperimentResult res;
  const FlowRun r = run(make_flow_config(c), make_initial_state(c));
  res.series = flow_table(r);
  flow_summary(r, res.summary);
  res.verdict = to_string(r.verdict);
  res.success = finished(r.verdict);
  return res;
}

ExperimentResult stability(const ExperimentConfig& c) {
  ExperimentResult res;
  const FlowRun r = run(make_flow_config(c), make_initial_state(c));
  res.series = flow_table(r);
  flow_summary(r, res.summary);
  const StabilityReport rep = verify_limit_stability(r);
  json& s = res.summary;
  s["stability_verdict"] = to_string(rep.verdict);
  s["lambda1"] = num(rep.lambda1);
  s["marginal_tol"] = rep.marginal_tol;
  s["eta_min"] = num(rep.eta_min);
  s["eta_max"] = num(rep.eta_max);
  s["positive_eta"] = rep.positive_eta;
  s["heuristic"] = rep.heuristic;
  s["sweeps"] = rep.sweeps;
  s["note"] = rep.note;
  res.verdict = to_string(rep.verdict);
  res.success = rep.not_unstable() && rep.positive_eta;
  return res;
}

ExperimentResult foliate_experiment(const ExperimentConfig& c) {
  ExperimentResult res;
  const FlowConfig fc = make_flow_config(c);
  const FlowRun r = run(fc, make_initial_state(c));
  flow_summary(r, res.summary);
  if (r.verdict != Verdict::Converged) {
    res.series = flow_table(r);
    res.verdict = "FlowNotConverged";
    return res;
  }
  FoliateOptions o;
  o.eps_step = c.foliate_eps_step;
  o.leaves_per_side = c.foliate_leaves;
  o.force_bordered = c.foliate_bordered;
  json& s = res.summary;
  try {
    const Foliation f = foliate(*fc.model, r.final_state, fc.curvature, fc.forcing, o);
    res.series.columns = {"eps", "tau", "u_min", "u_max", "newton_iterations"};
    std::vector<double> eps, tau;
    for (const Leaf& l : f.leaves) {
      const auto [lo, hi] = std::minmax_element(l.u.begin(), l.u.end());
      res.series.rows.push_back({l.eps, l.tau, *lo, *hi, static_cast<double>(l.newton_iterations)});
      eps.push_back(l.eps);
      tau.push_back(l.tau);
    }
    s["leaves"] = f.leaves.size();
    s["eps"] = num_array(eps);
    s["tau"] = num_array(tau);
    s["ordered"] = f.ordered;
    s["tau_sign_matches"] = f.tau_sign_matches;
    s["bordered"] = f.bordered;
    s["lambda1"] = f.lambda1;
    res.success = f.ordered && f.tau_sign_matches;
    res.verdict = res.success ? "Foliated" : "NotOrdered";
  } catch (const FoliateError& e) {
    s["error"] = e.what();
    s["last_good_eps"] = e.last_good_eps;
    res.verdict = "FoliateError";
  }
  return res;
}

ExperimentResult imcf(const ExperimentConfig& c) {
  ExperimentResult res;
  const FlowRun r = run(make_flow_config(c), make_initial_state(c));
  res.series = flow_table(r);
  flow_summary(r, res.summary);
  const ImcfDiagnostics d = imcf_diagnostics(r);
  res.summary["volume_decay_slope"] = num(d.volume_decay_slope);
  res.summary["tau_volume_error"] = num(d.tau_volume_error);
  res.summary["log_g_relation_residual"] = num(d.log_g_relation_residual);
  // A run stopped before its first step carries no decay information.
  const bool resolved = r.series.size() >= 3;
  res.verdict = resolved ? to_string(r.verdict) : "Unresolved";
  res.success = resolved && r.verdict == Verdict::HorizonReached;
  return res;
}

RescaledOptions rescaled_options(const ExperimentConfig& c) {
  RescaledOptions o;
  o.dt_max = c.dt_max;
  o.fixed_dt = c.fixed_dt;
  o.dt_safety = c.dt_safety;
  o.snapshot_every = c.snapshot_every;
  return o;
}

ExperimentResult arw_rescaled(const ExperimentConfig& c) {
  ExperimentResult res;
  const ModelPtr model = make_model(c.model);
  const RescaledSeries sr = run_rescaled_imcf(model, make_initial_state(c), c.t_max, rescaled_options(c));
  const MetricLimitReport ml = check_rescaled_metric_limit(sr, *model);
  const UmbilicityReport ur = check_umbilicity_decay(sr);
  const ARWProfile& a = sr.profile;
  const double scale = std::pow(a.gamma_tilde * a.mass, 1.0 / a.gamma_tilde);
  LocalData ld;
  const auto x0 = c.grid.point(0);
  model->local({-1e-300, x0[0], x0[1], x0[2]}, ld);

  res.series.columns = {"t", "u_tilde_min", "u_tilde_max", "g11_rescaled", "g11_target",
                        "metric_error", "umbilicity_sup", "umbilicity_raw_sup"};
  for (std::size_t k = 0; k < sr.states.size(); ++k) {
    const RescaledState& st = sr.states[k];
    const auto [lo, hi] = std::minmax_element(st.u_tilde.begin(), st.u_tilde.end());
    res.series.rows.push_back(
        {st.t, *lo, *hi, st.g_rescaled[0][0],
         scale * std::pow(-st.u_tilde[0], 2.0 / a.gamma_tilde) * ld.sig[0][0], ml.errors[k],
         *std::max_element(st.umbilicity.begin(), st.umbilicity.end()),
         *std::max_element(st.umbilicity_raw.begin(), st.umbilicity_raw.end())});
  }
  json& s = res.summary;
  flow_summary(sr.run, s);
  s["gamma_tilde"] = a.gamma_tilde;
  s["gamma"] = a.gamma;
  s["mass"] = a.mass;
  s["u_tilde_bounds"] = json::array({-sr.c2, -sr.c1});
  s["drift_last_quartile"] = sr.drift_last_quartile;
  s["late_divergence"] = sr.late_divergence;
  s["metric_limit_error"] = ml.limit_error;
  s["metric_anisotropy"] = ml.anisotropy;
  s["umbilicity_verdict"] = to_string(ur.verdict);
  s["umbilicity_rate"] = num(ur.rate);
  s["umbilicity_raw_rate"] = num(ur.raw_rate);
  s["umbilicity_predicted_rate"] = ur.predicted_rate;
  s["umbilicity_improved_rate"] = num(ur.improved_rate);
  res.success = sr.run.verdict == Verdict::HorizonReached && sr.c1 > 0.0 && !sr.late_divergence;
  res.verdict = res.success ? "Converging" : to_string(sr.run.verdict);
  return res;
}

ExperimentResult transition(const ExperimentConfig& c) {
  ExperimentResult res;
  const ModelPtr model = make_model(c.model);
  RescaledOptions o = rescaled_options(c);
  o.snapshot_every = 1;
  if (!(o.fixed_dt > 0.0)) o.fixed_dt = 0.005;
  const RescaledSeries sr = run_rescaled_imcf(model, make_initial_state(c), c.t_max, o);
  const TransitionFlow tf = build_transition_flow(sr);
  C3Options co;
  co.delta0 = c.c3_delta0;
  co.levels = c.c3_levels;
  const C3Report rep = c3_probe(tf, co);

  res.series.columns = {"s", "t", "y0"};
  for (std::size_t k = 0; k < tf.s.size(); ++k) res.series.rows.push_back({tf.s[k], tf.t[k], tf.y0[k][0]});
  json& s = res.summary;
  flow_summary(sr.run, s);
  s["gamma"] = tf.gamma;
  s["c3_order"] = rep.order_supported;
  s["odd_symmetry_error"] = rep.odd_symmetry_error;
  json orders = json::object();
  for (int k = 1; k <= 4; ++k)
    orders[std::to_string(k)] = {{"verdict", to_string(rep.verdicts[k])},
                                 {"threshold", rep.threshold[k]},
                                 {"gaps", num_array(rep.gaps[k])}};
  s["orders"] = orders;
  if (c.model.eps == 0.0) {
    const CmcAsymptotics cmc = cmc_foliation_asymptotics(*model);
    s["cmc_constant"] = cmc.constant;
    s["cmc_drift_last_decade"] = cmc.drift_last_decade;
    s["cmc_ds_dphi"] = json::array({cmc.ds_dphi_min, cmc.ds_dphi_max});
  }
  res.success = rep.order_supported >= 3;
  res.verdict = "C" + std::to_string(rep.order_supported);
  return res;
}

double observed_order(double coarse, double fine) { return std::log2(coarse / fine); }

ExperimentResult identity_suite(const ExperimentConfig& c) {
  ExperimentResult res;
  FlowConfig fc = make_flow_config(c);
  fc.snapshot_every = 1;
  fc.convergence_tol = 0.0;
  const auto& levels = c.identity_levels;
  std::vector<GraphState> init;
  for (int N : levels) {
    ExperimentConfig lc = c;
    lc.grid.N = N;
    init.push_back(make_initial_state(lc));
  }
  // dt halves with Δx, starting from a step admissible on the finest grid.
  double dt = c.fixed_dt;
  if (!(dt > 0.0)) dt = 0.9 * cfl_limit(fc, init.back()) * (levels.back() / static_cast<double>(levels.front()));

  const char* names[] = {"gauss", "codazzi", "weingarten", "metric", "normal", "second", "speed"};
  std::vector<std::array<double, 7>> resid;
  res.series.columns = {"N", "dt", "gauss", "codazzi", "weingarten", "metric", "normal", "second", "speed"};
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const StructureResiduals sr = check_gauss_codazzi(*fc.model, init[l]);
    fc.fixed_dt = dt / static_cast<double>(1 << l);
    fc.t_max = c.identity_steps * dt;
    const FlowRun r = run(fc, init[l]);
    if (!finished(r.verdict)) throw NumericalError("identity run ended with " + to_string(r.verdict));
    const IdentityResiduals ir = check_evolution_identities(r, r.snapshots.size() / 2);
    resid.push_back({sr.gauss, sr.codazzi, sr.weingarten, ir.metric, ir.normal, ir.second, ir.speed});
    std::vector<double> row{static_cast<double>(levels[l]), fc.fixed_dt};
    row.insert(row.end(), resid.back().begin(), resid.back().end());
    res.series.rows.push_back(row);
  }
  json orders = json::object(), residuals = json::object();
  double min_order = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 7; ++i) {
    std::vector<double> o, r;
    for (std::size_t l = 0; l < levels.size(); ++l) r.push_back(resid[l][i]);
    for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
      o.push_back(observed_order(resid[l][i], resid[l + 1][i]));
      min_order = std::min(min_order, o.back());
    }
    orders[names[i]] = num_array(o);
    residuals[names[i]] = num_array(r);
  }
  res.summary["levels"] = levels;
  res.summary["dt_coarsest"] = dt;
  res.summary["residuals"] = residuals;
  res.summary["orders"] = orders;
  res.summary["min_order"] = num(min_order);
  res.success = min_order >= 3.0;
  res.verdict = res.success ? "Convergent" : "OrderDeficit";
  return res;
}

ExperimentResult decay_check(const ExperimentConfig& c) {
  ExperimentResult res;
  const ModelPtr model = make_model(c.model);
  double cc = c.decay_c;
  if (!(cc > 0.0)) {
    if (const ARWProfile* a = model->arw())
      cc = c.model.n / a->gamma_tilde;
    else if (c.model.label == "robertson_walker")
      cc = c.model.n * c.model.p;
    else
      throw ConfigError("decay.c: no default for model '" + c.model.label + "'");
  }
  const StrongDecayReport rep = check_strong_volume_decay(*model, {c.decay_tau0}, cc, c.decay_decades);
  const double logdet = log_det_relation_residual(*model, c.logdet_tau0, c.logdet_tau1);
  res.series.columns = {"decade", "partial_sum"};
  for (std::size_t k = 0; k < rep.partial_sums.size(); ++k)
    res.series.rows.push_back({static_cast<double>(k), rep.partial_sums[k]});
  json& s = res.summary;
  s["decay_verdict"] = to_string(rep.verdict);
  s["phi_constant"] = cc;
  s["min_ratio"] = num(rep.min_ratio);
  s["unbounded"] = rep.unbounded;
  s["partial_sums"] = num_array(rep.partial_sums);
  s["log_det_residual"] = num(logdet);
  res.success = rep.verdict == DecayVerdict::Holds && rep.unbounded && logdet < 1e-8;
  res.verdict = to_string(rep.verdict);
  return res;
}

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

}  // namespace

ExperimentResult execute(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::FlowRun: return flow_run(c);
    case ExperimentKind::Stability: return stability(c);
    case ExperimentKind::Foliate: return foliate_experiment(c);
    case ExperimentKind::Imcf: return imcf(c);
    case ExperimentKind::ArwRescaled: return arw_rescaled(c);
    case ExperimentKind::Transition: return transition(c);
    case ExperimentKind::IdentitySuite: return identity_suite(c);
    case ExperimentKind::DecayCheck: return decay_check(c);
  }
  throw ConfigError("experiment.kind: unhandled");
}

std::string resolve_output_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("FLOWLAB_OUTPUT"); env && *env) return env;
  return cfg.output_dir;
}

void write_csv(const std::string& path, const Table& t) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < t.columns.size(); ++i) f << (i ? "," : "") << t.columns[i];
  f << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << fmt17(row[i]);
    f << "\n";
  }
}

Table read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("missing artifact " + path);
  Table t;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty artifact " + path);
  std::stringstream hs(line);
  for (std::string col; std::getline(hs, col, ',');) t.columns.push_back(col);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::strtod(cell.c_str(), nullptr));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& r, const std::string& dir) {
  fs::create_directories(dir);
  const std::string hash = hex64(config_hash(cfg));
  write_csv((fs::path(dir) / "run.csv").string(), r.series);
  json s = r.summary;
  s["experiment"] = to_string(cfg.kind);
  s["verdict"] = r.verdict;
  s["success"] = r.success;
  s["config_hash"] = hash;
  s["seed"] = cfg.seed;
  write_json((fs::path(dir) / "summary.json").string(), s);
  json m;
  m["config_hash"] = hash;
  m["code_version"] = FLOWLAB_VERSION;
  m["seed"] = cfg.seed;
  m["experiment"] = to_string(cfg.kind);
  m["config"] = cfg.raw;
  m["artifacts"] = json::array({"run.csv", "summary.json"});
  write_json((fs::path(dir) / "manifest.json").string(), m);
}

int run_experiment(const std::string& config_path, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    validate(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  ExperimentResult r;
  try {
    r = execute(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    r = ExperimentResult{};
    r.verdict = "Error";
    r.summary["error"] = e.what();
  }
  const std::string dir = resolve_output_dir(cfg);
  try {
    write_artifacts(cfg, r, dir);
  } catch (const std::exception& e) {
    err << "cannot write artifacts: " << e.what() << "\n";
    return kExitFailure;
  }
  out << to_string(cfg.kind) << ": " << r.verdict << " -> " << dir << "\n";
  return r.success ? kExitOk : kExitFailure;
}

int emit_plotdata(const std::string& output_dir, std::ostream& err) {
  const fs::path dir(output_dir);
  json summary;
  Table t;
  try {
    std::ifstream sf(dir / "summary.json");
    if (!sf) throw std::runtime_error("missing artifact " + (dir / "summary.json").string());
    sf >> summary;
    t = read_csv((dir / "run.csv").string());
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitFailure;
  }
  auto col = [&](const std::string& name) -> int {
    const auto it = std::find(t.columns.begin(), t.columns.end(), name);
    return it == t.columns.end() ? -1 : static_cast<int>(it - t.columns.begin());
  };
  const int x = col("t") >= 0 ? col("t") : 0;
  const std::string header = "# " + summary.value("experiment", std::string("?")) + " config_hash " +
                             summary.value("config_hash", std::string("?")) + "\n";
  const fs::path pdir = dir / "plot";
  fs::create_directories(pdir);
  auto table = [&](const std::string& file, const std::vector<int>& cols) {
    std::ofstream f(pdir / file);
    f << header << "#";
    for (int c : cols) f << " " << t.columns[static_cast<std::size_t>(c)];
    f << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < cols.size(); ++i)
        f << (i ? " " : "") << fmt17(row[static_cast<std::size_t>(cols[i])]);
      f << "\n";
    }
  };
  std::vector<bool> used(t.columns.size(), false);
  used[static_cast<std::size_t>(x)] = true;
  if (col("volume") >= 0 && col("volume_prediction") >= 0) {
    table("volume.dat", {x, col("volume"), col("volume_prediction")});
    used[static_cast<std::size_t>(col("volume"))] = used[static_cast<std::size_t>(col("volume_prediction"))] = true;
  }
  if (col("g11_rescaled") >= 0 && col("g11_target") >= 0) {
    table("rescaled_metric.dat", {x, col("g11_rescaled"), col("g11_target")});
    used[static_cast<std::size_t>(col("g11_rescaled"))] = used[static_cast<std::size_t>(col("g11_target"))] = true;
  }
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    if (!used[c]) table(t.columns[c] + ".dat", {x, static_cast<int>(c)});
  return kExitOk;
}

int run_suite(const std::string& exe, const std::string& dir, int jobs, std::ostream& out,
              std::ostream& err) {
  std::vector<std::string> configs;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec))
    if (e.is_regular_file() && e.path().extension() == ".ini") configs.push_back(e.path().string());
  if (ec) {
    err << "cannot list " << dir << ": " << ec.message() << "\n";
    return kExitConfig;
  }
  std::sort(configs.begin(), configs.end());
  jobs = std::max(1, jobs);
  std::map<pid_t, std::string> running;
  int worst = kExitOk;
  auto reap = [&]() {
    int status = 0;
    const pid_t pid = waitpid(-1, &status, 0);
    if (pid <= 0) return;
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kExitFailure;
    out << running[pid] << ": exit " << code << "\n";
    worst = std::max(worst, code);
    running.erase(pid);
  };
  for (const auto& c : configs) {
    while (static_cast<int>(running.size()) >= jobs) reap();
    std::string a0 = exe, a1 = "run", a2 = c;
    char* argv[] = {a0.data(), a1.data(), a2.data(), nullptr};
    pid_t pid = 0;
    if (posix_spawn(&pid, exe.c_str(), nullptr, nullptr, argv, environ) != 0) {
      err << c << ": cannot start " << exe << "\n";
      worst = std::max(worst, kExitFailure);
      continue;
    }
    running[pid] = c;
  }
  while (!running.empty()) reap();
  return worst;
}

}  // namespace flowlab
