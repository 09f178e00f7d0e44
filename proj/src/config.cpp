#include "flowlab/config.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "flowlab/errors.hpp"
#include "flowlab/hypersurface.hpp"

namespace flowlab {

namespace {

struct Kind {
  ExperimentKind kind;
  const char* name;
};
constexpr Kind kKinds[] = {
    {ExperimentKind::FlowRun, "flow_run"},         {ExperimentKind::Stability, "stability"},
    {ExperimentKind::Foliate, "foliate"},          {ExperimentKind::Imcf, "imcf"},
    {ExperimentKind::ArwRescaled, "arw_rescaled"}, {ExperimentKind::Transition, "transition"},
    {ExperimentKind::IdentitySuite, "identity_suite"}, {ExperimentKind::DecayCheck, "decay_check"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const std::string t = trim(v);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const std::string t = trim(v);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& v)>;

Setter num(double ExperimentConfig::*m) {
  return [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = to_double(k, v); };
}
Setter integer(int ExperimentConfig::*m) {
  return [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.*m = static_cast<int>(to_int(k, v));
  };
}
Setter model_num(double ModelParams::*m) {
  return [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.model.*m = to_double(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = {
      {"experiment.kind",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         try {
           c.kind = parse_experiment(v);
         } catch (const ConfigError& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"experiment.seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const long long x = to_int(k, v);
         if (x < 0) throw ConfigError(k + ": must be non-negative");
         c.seed = static_cast<std::uint64_t>(x);
       }},
      {"experiment.output_dir",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = trim(v); }},
      {"model.label", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.model.label = trim(v); }},
      {"model.n",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.model.n = static_cast<int>(to_int(k, v));
         c.grid.n = c.model.n;
       }},
      {"model.c0", model_num(&ModelParams::c0)},
      {"model.p", model_num(&ModelParams::p)},
      {"model.tau_min", model_num(&ModelParams::tau_min)},
      {"model.omega", model_num(&ModelParams::omega)},
      {"model.beta", model_num(&ModelParams::beta)},
      {"model.kappa", model_num(&ModelParams::kappa)},
      {"model.eps", model_num(&ModelParams::eps)},
      {"model.power", model_num(&ModelParams::power)},
      {"model.bump", model_num(&ModelParams::bump)},
      {"model.aniso", model_num(&ModelParams::aniso)},
      {"model.slicing", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.model.slicing = trim(v); }},
      {"grid.N",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.grid.N = static_cast<int>(to_int(k, v));
       }},
      {"grid.L",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.grid.L = to_double(k, v);
         c.model.period = c.grid.L;
       }},
      {"curvature.kind",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         try {
           c.curvature.kind = parse_fkind(trim(v), &c.curvature.k);
         } catch (const std::exception& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"curvature.phi",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         try {
           c.curvature.phi = parse_phi(trim(v));
         } catch (const std::exception& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"curvature.epsilon",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.curvature.epsilon = to_double(k, v);
       }},
      {"flow.mode",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         try {
           c.mode = parse_mode(trim(v));
         } catch (const ConfigError& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"flow.f0", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.forcing.f0 = to_double(k, v); }},
      {"flow.f_amp", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.forcing.amp = to_double(k, v); }},
      {"flow.f_slope", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.forcing.slope = to_double(k, v); }},
      {"flow.dt_safety", num(&ExperimentConfig::dt_safety)},
      {"flow.dt_max", num(&ExperimentConfig::dt_max)},
      {"flow.fixed_dt", num(&ExperimentConfig::fixed_dt)},
      {"flow.t_max", num(&ExperimentConfig::t_max)},
      {"flow.tol", num(&ExperimentConfig::tol)},
      {"flow.snapshot_every", integer(&ExperimentConfig::snapshot_every)},
      {"initial.u0", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.initial.u0 = to_double(k, v); }},
      {"initial.amplitude", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.initial.amplitude = to_double(k, v); }},
      {"initial.kmax", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.initial.kmax = static_cast<int>(to_int(k, v)); }},
      {"identity.levels",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.identity_levels.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ','))
           if (!trim(item).empty()) c.identity_levels.push_back(static_cast<int>(to_int(k, item)));
       }},
      {"identity.steps", integer(&ExperimentConfig::identity_steps)},
      {"foliate.eps_step", num(&ExperimentConfig::foliate_eps_step)},
      {"foliate.leaves", integer(&ExperimentConfig::foliate_leaves)},
      {"foliate.bordered",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.foliate_bordered = to_bool(k, v); }},
      {"decay.tau0", num(&ExperimentConfig::decay_tau0)},
      {"decay.c", num(&ExperimentConfig::decay_c)},
      {"decay.decades", integer(&ExperimentConfig::decay_decades)},
      {"decay.logdet_tau0", num(&ExperimentConfig::logdet_tau0)},
      {"decay.logdet_tau1", num(&ExperimentConfig::logdet_tau1)},
      {"transition.delta0", num(&ExperimentConfig::c3_delta0)},
      {"transition.levels", integer(&ExperimentConfig::c3_levels)},
  };
  return s;
}

}  // namespace

ExperimentKind parse_experiment(const std::string& s) {
  const std::string t = trim(s);
  for (const auto& k : kKinds)
    if (t == k.name) return k.kind;
  throw ConfigError("unknown experiment '" + t + "'");
}

std::string to_string(ExperimentKind k) {
  for (const auto& e : kKinds)
    if (e.kind == k) return e.name;
  return "?";
}

ExperimentConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.model.period = cfg.grid.L;
  for (const auto& it : items) {
    if (it.name == "++" || it.name == "--") continue;
    const std::string key = it.fullname();
    std::string value;
    for (std::size_t i = 0; i < it.inputs.size(); ++i) value += (i ? "," : "") + it.inputs[i];
    const auto s = setters().find(key);
    if (s == setters().end()) throw ConfigError(key + ": unknown field");
    s->second(cfg, key, value);
    cfg.raw[key] = trim(value);
  }
  for (const char* req : {"experiment.kind", "model.label", "grid.N"})
    if (!cfg.raw.count(req)) throw ConfigError(std::string(req) + ": missing required field");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

}  // namespace

void validate(const ExperimentConfig& c) {
  require(c.model.n >= 1 && c.model.n <= 3, "model.n", "must lie in 1..3");
  c.grid.validate();
  ModelPtr model;
  try {
    model = make_model(c.model);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model.label: ") + e.what());
  }
  require(c.curvature.epsilon >= 0.0, "curvature.epsilon", "must be non-negative");
  require(c.dt_safety > 0.0 && c.dt_safety <= 1.0, "flow.dt_safety", "must lie in (0, 1]");
  require(c.dt_max > 0.0, "flow.dt_max", "must be positive");
  require(c.fixed_dt >= 0.0, "flow.fixed_dt", "must be non-negative");
  require(c.t_max > 0.0, "flow.t_max", "must be positive");
  require(c.tol > 0.0, "flow.tol", "must be positive");
  require(c.snapshot_every >= 1, "flow.snapshot_every", "must be >= 1");
  require(c.initial.amplitude >= 0.0, "initial.amplitude", "must be non-negative");
  require(c.initial.kmax >= 1 && c.initial.kmax < c.grid.N / 4, "initial.kmax", "must lie in 1..N/4");

  switch (c.kind) {
    case ExperimentKind::Imcf:
      require(c.mode != FlowMode::Generic, "flow.mode", "imcf needs imcf or imcf_conformal");
      break;
    case ExperimentKind::ArwRescaled:
    case ExperimentKind::Transition:
      require(model->arw() != nullptr, "model.label", "needs an arw_power model");
      break;
    case ExperimentKind::Stability:
    case ExperimentKind::Foliate:
      require(c.mode == FlowMode::Generic, "flow.mode", "stability needs the generic flow");
      require(c.foliate_eps_step > 0.0, "foliate.eps_step", "must be positive");
      require(c.foliate_leaves >= 1, "foliate.leaves", "must be >= 1");
      break;
    case ExperimentKind::IdentitySuite: {
      require(c.identity_levels.size() >= 2, "identity.levels", "needs at least two resolutions");
      for (std::size_t i = 0; i < c.identity_levels.size(); ++i) {
        SpatialGrid g = c.grid;
        g.N = c.identity_levels[i];
        try {
          g.validate();
        } catch (const ConfigError& e) {
          throw ConfigError(std::string("identity.levels: ") + e.what());
        }
        require(i == 0 || c.identity_levels[i] == 2 * c.identity_levels[i - 1], "identity.levels",
                "each level must double the previous one");
      }
      require(c.identity_steps >= 4, "identity.steps", "must be >= 4");
      break;
    }
    case ExperimentKind::DecayCheck:
      require(c.decay_tau0 < 0.0, "decay.tau0", "must be negative");
      require(c.decay_decades >= 2, "decay.decades", "must be >= 2");
      require(c.decay_c >= 0.0, "decay.c", "must be non-negative");
      return;  // no hypersurface involved
    case ExperimentKind::FlowRun:
      break;
  }

  // The initial hypersurface must be spacelike and admissible before any run starts.
  const GraphState s0 = make_initial_state(c);
  try {
    const HypersurfaceGeometry g = compute_geometry(*model, s0);
    if (c.mode == FlowMode::Generic && c.kind != ExperimentKind::ArwRescaled &&
        c.kind != ExperimentKind::Transition) {
      const AdmissibilityReport a = admissibility(g, c.curvature.cone(c.model.n));
      require(a.all, "initial.u0",
              "initial hypersurface leaves the curvature cone at point " + std::to_string(a.first_violation));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("initial.u0: ") + e.what());
  }
}

FlowConfig make_flow_config(const ExperimentConfig& c) {
  FlowConfig f;
  f.model = make_model(c.model);
  f.curvature = c.curvature;
  f.forcing = c.forcing;
  f.mode = c.mode;
  f.dt_safety = c.dt_safety;
  f.dt_max = c.dt_max;
  f.fixed_dt = c.fixed_dt;
  f.t_max = c.t_max;
  f.convergence_tol = c.tol;
  f.snapshot_every = c.snapshot_every;
  f.monitor_every = 1;
  return f;
}

GraphState make_initial_state(const ExperimentConfig& c) {
  if (c.initial.amplitude > 0.0)
    return random_band_limited(c.grid, c.initial.u0, c.initial.amplitude, c.initial.kmax, c.seed);
  return constant_state(c.grid, c.initial.u0);
}

std::string canonical_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, v] : c.raw)
    if (k != "experiment.output_dir") out += k + " = " + v + "\n";
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canonical_text(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace flowlab
