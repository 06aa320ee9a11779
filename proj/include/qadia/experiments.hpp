#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "ensemble.hpp"
#include "kernel.hpp"
#include "models.hpp"
#include "noise.hpp"
#include "solver.hpp"

namespace qadia {

/// Parsed experiment description: model/noise/solver/ensemble/scan/output
/// sections of a flat key = value config file. Unknown sections or keys are
/// hard errors so typos in physics parameters cannot pass silently.
struct ExperimentConfig {
  ModelSpec model;
  NoiseSpec noise;
  SolverConfig solver;
  int n_traj = 1;
  std::uint64_t base_seed = 1;

  std::string scan_parameter;  // "passage_time" or "gamma"
  std::vector<double> scan_values;
  double fidelity_target = 0.95;

  std::string out_dir = "out";
  std::string out_name = "run";

  bool t_end_given = false;
  bool steps_given = false;
};

namespace cfgdetail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config value for '" + key + "' is not a number: '" + v + "'");
  }
}

inline long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config value for '" + key + "' is not an integer: '" + v + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("config value for '" + key + "' is not an unsigned integer: '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config value for '" + key + "' is not a boolean: '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty entry in list for '" + key + "'");
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("list for '" + key + "' is empty");
  return out;
}

}  // namespace cfgdetail

inline ExperimentConfig parse_config_text(const std::string& text) {
  using namespace cfgdetail;
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"model",
       {"name", "j0", "omega_drive", "omega_z", "passage_time", "a0", "b0",
        "initial_branch", "mu_re", "mu_im", "nu_re", "nu_im"}},
      {"noise", {"kind", "strength", "shot_rate", "amplitude", "frequency", "seed"}},
      {"solver", {"method", "steps", "t_end", "include_geometric_term"}},
      {"ensemble", {"n_traj", "base_seed"}},
      {"scan", {"parameter", "values", "fidelity_target"}},
      {"output", {"dir", "name"}}};

  ExperimentConfig cfg;
  cfg.solver.steps = 0;  // resolved below
  bool model_named = false;
  double mu_re = 1, mu_im = 0, nu_re = 0, nu_im = 0;

  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!allowed.count(section))
        throw ConfigError("unknown config section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("config key '" + key + "' appears before any section");
    if (!allowed.at(section).count(key))
      throw ConfigError("unknown key '" + key + "' in section [" + section + "]");

    if (section == "model") {
      if (key == "name") {
        model_named = true;
        if (val == "generic_tls") cfg.model.kind = ModelKind::GenericTLS;
        else if (val == "linear_sweep") cfg.model.kind = ModelKind::LinearSweep;
        else if (val == "model_a") cfg.model.kind = ModelKind::ModelA;
        else if (val == "model_b") cfg.model.kind = ModelKind::ModelB;
        else throw ConfigError("unknown model name '" + val + "'");
      } else if (key == "j0") cfg.model.j0 = parse_double(key, val);
      else if (key == "omega_drive") cfg.model.omega_drive = parse_double(key, val);
      else if (key == "omega_z") cfg.model.omega_z = parse_double(key, val);
      else if (key == "passage_time") cfg.model.passage_time = parse_double(key, val);
      else if (key == "a0") cfg.model.a0 = parse_double(key, val);
      else if (key == "b0") cfg.model.b0 = parse_double(key, val);
      else if (key == "initial_branch") {
        if (val == "e0") cfg.model.initial_branch = Branch::E0;
        else if (val == "e1") cfg.model.initial_branch = Branch::E1;
        else throw ConfigError("initial_branch must be e0 or e1, got '" + val + "'");
      } else if (key == "mu_re") mu_re = parse_double(key, val);
      else if (key == "mu_im") mu_im = parse_double(key, val);
      else if (key == "nu_re") nu_re = parse_double(key, val);
      else if (key == "nu_im") nu_im = parse_double(key, val);
    } else if (section == "noise") {
      if (key == "kind") {
        if (val == "none") cfg.noise.kind = NoiseKind::None;
        else if (val == "gaussian_white") cfg.noise.kind = NoiseKind::GaussianWhite;
        else if (val == "shot") cfg.noise.kind = NoiseKind::ShotNoise;
        else if (val == "deterministic") cfg.noise.kind = NoiseKind::Deterministic;
        else throw ConfigError("unknown noise kind '" + val + "'");
      } else if (key == "strength") cfg.noise.strength = parse_double(key, val);
      else if (key == "shot_rate") cfg.noise.shot_rate = parse_double(key, val);
      else if (key == "amplitude") cfg.noise.amplitude = parse_double(key, val);
      else if (key == "frequency") cfg.noise.frequency = parse_double(key, val);
      else if (key == "seed") cfg.noise.seed = parse_u64(key, val);
    } else if (section == "solver") {
      if (key == "method") {
        if (val == "volterra") cfg.solver.method = Method::VolterraQuadrature;
        else if (val == "auxiliary_ode") cfg.solver.method = Method::AuxiliaryODE;
        else if (val == "component_oracle") cfg.solver.method = Method::ComponentOracle;
        else throw ConfigError("unknown solver method '" + val + "'");
      } else if (key == "steps") {
        cfg.solver.steps = static_cast<int>(parse_long(key, val));
        cfg.steps_given = true;
      } else if (key == "t_end") {
        cfg.solver.t_end = parse_double(key, val);
        cfg.t_end_given = true;
      } else if (key == "include_geometric_term")
        cfg.solver.include_geometric_term = parse_bool(key, val);
    } else if (section == "ensemble") {
      if (key == "n_traj") cfg.n_traj = static_cast<int>(parse_long(key, val));
      else if (key == "base_seed") cfg.base_seed = parse_u64(key, val);
    } else if (section == "scan") {
      if (key == "parameter") cfg.scan_parameter = val;
      else if (key == "values") cfg.scan_values = parse_list(key, val);
      else if (key == "fidelity_target") cfg.fidelity_target = parse_double(key, val);
    } else if (section == "output") {
      if (key == "dir") cfg.out_dir = val;
      else if (key == "name") cfg.out_name = val;
    }
  }

  if (!model_named) throw ConfigError("config is missing model.name");
  cfg.model.mu = cplx(mu_re, mu_im);
  cfg.model.nu = cplx(nu_re, nu_im);
  cfg.model.validate();
  cfg.noise.j0 = cfg.model.j0;
  cfg.noise.validate();
  if (cfg.n_traj < 1) throw ConfigError("ensemble n_traj must be >= 1");
  for (double v : cfg.scan_values)
    if (!std::isfinite(v)) throw ConfigError("scan values must be finite");

  if (!cfg.t_end_given) {
    if (cfg.model.time_bounded()) cfg.solver.t_end = cfg.model.passage_time;
    else throw ConfigError("solver.t_end is required for models without a passage time");
  }
  if (cfg.model.time_bounded() && cfg.solver.t_end > cfg.model.passage_time * (1 + 1e-12))
    throw ConfigError("solver.t_end exceeds the model passage_time");
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Extends the step rule to Gaussian white noise: the per-half-step phase
/// spread sqrt(Gamma h/2) k must stay well below a radian.
inline int resolve_steps(const ModelSpec& model, const NoiseSpec& noise, double t_end) {
  int steps = default_steps(model, noise, t_end);
  if (noise.kind == NoiseKind::GaussianWhite && noise.gamma() > 0.0) {
    const double h = 0.18 / (noise.gamma() * sqr(model.k_max(t_end)));
    steps = std::max(steps, static_cast<int>(std::ceil(t_end / h)));
  }
  return steps;
}

inline SolverConfig resolved_solver(const ExperimentConfig& cfg) {
  SolverConfig s = cfg.solver;
  if (!cfg.steps_given || s.steps <= 0)
    s.steps = resolve_steps(cfg.model, cfg.noise, s.t_end);
  return s;
}

// ---------------------------------------------------------------------------
// output writers (fixed-width scientific, 9 significant digits)
// ---------------------------------------------------------------------------

namespace csvdetail {

struct File {
  std::FILE* f = nullptr;
  explicit File(const std::string& path) {
    f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
  }
  ~File() {
    if (f) std::fclose(f);
  }
  File(const File&) = delete;
  File& operator=(const File&) = delete;
};

}  // namespace csvdetail

inline void write_trajectory_csv(const std::string& path, const TrajectoryResult& r) {
  csvdetail::File out(path);
  std::fprintf(out.f, "t,abs_psi0,re_psi0,im_psi0,residual_abs\n");
  for (std::size_t i = 0; i < r.grid.size(); ++i)
    std::fprintf(out.f, "%.8e,%.8e,%.8e,%.8e,%.8e\n", r.grid[i], std::abs(r.psi0[i]),
                 r.psi0[i].real(), r.psi0[i].imag(), std::abs(r.residual[i]));
}

inline void write_ensemble_csv(const std::string& path, const EnsembleResult& r) {
  csvdetail::File out(path);
  std::fprintf(out.f, "t,mean_abs_psi0,stderr_abs,mean_pop0,stderr_pop,purity\n");
  for (std::size_t i = 0; i < r.grid.size(); ++i)
    std::fprintf(out.f, "%.8e,%.8e,%.8e,%.8e,%.8e,%.8e\n", r.grid[i], r.mean_abs_psi0[i],
                 r.stderr_abs[i], r.mean_pop0[i], r.stderr_pop[i], r.purity[i]);
}

inline void write_summary(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << j.dump(2) << "\n";
}

struct RunOutputs {
  std::vector<std::string> files;
  nlohmann::json summary;
};

namespace rundetail {

inline nlohmann::json config_echo(const ExperimentConfig& cfg, const SolverConfig& solver) {
  nlohmann::json j;
  j["model"] = model_name(cfg.model.kind);
  j["j0"] = cfg.model.j0;
  j["noise_kind"] = noise_name(cfg.noise.kind);
  j["noise_strength"] = cfg.noise.strength;
  j["noise_gamma"] = cfg.noise.stochastic() ? cfg.noise.gamma() : 0.0;
  j["method"] = method_name(solver.method);
  if (solver.steps > 0) j["steps"] = solver.steps;
  else j["steps"] = "auto";
  j["t_end"] = solver.t_end;
  return j;
}

inline nlohmann::json metrics_json(const Metrics& m) {
  return nlohmann::json{{"min_abs_psi0", m.min_abs_psi0},
                        {"final_abs_psi0", m.final_abs_psi0},
                        {"final_fidelity", m.final_fidelity},
                        {"time_of_min", m.time_of_min}};
}

inline std::string out_path(const ExperimentConfig& cfg, const std::string& suffix) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / (cfg.out_name + suffix)).string();
}

}  // namespace rundetail

// ---------------------------------------------------------------------------
// drivers
// ---------------------------------------------------------------------------

/// `run` verb: one trajectory (n_traj = 1) or an ensemble, CSV + summary.
inline RunOutputs run_experiment(const ExperimentConfig& cfg) {
  const SolverConfig solver = resolved_solver(cfg);
  RunOutputs out;
  out.summary["command"] = "run";
  out.summary["config"] = rundetail::config_echo(cfg, solver);

  if (cfg.n_traj == 1) {
    const KernelContext ctx = KernelContext::build(cfg.model, solver.grid());
    NoisePath path;
    const NoisePath* pp = nullptr;
    if (cfg.noise.kind != NoiseKind::None) {
      path = sample_path(cfg.noise, ctx.grid().master_grid(), cfg.noise.seed);
      pp = &path;
    }
    const TrajectoryResult r = solve(ctx, pp, solver);
    const std::string csv = rundetail::out_path(cfg, "_trajectory.csv");
    write_trajectory_csv(csv, r);
    out.files.push_back(csv);
    out.summary["metrics"] = rundetail::metrics_json(metrics(r));
    out.summary["diagnostics"] = {{"final_phase_rad", std::arg(r.psi0.back())},
                                  {"noise_seed", r.noise_seed}};
  } else {
    const EnsembleResult er =
        run_ensemble(cfg.model, cfg.noise, solver, cfg.n_traj, cfg.base_seed);
    const std::string csv = rundetail::out_path(cfg, "_ensemble.csv");
    write_ensemble_csv(csv, er);
    out.files.push_back(csv);
    out.summary["metrics"] = rundetail::metrics_json(metrics(er));
    out.summary["ensemble"] = {{"n_traj", er.n_traj},
                               {"base_seed", er.base_seed},
                               {"final_purity", er.purity.back()}};
  }
  const std::string sj = rundetail::out_path(cfg, "_summary.json");
  write_summary(sj, out.summary);
  out.files.push_back(sj);
  return out;
}

namespace rundetail {

/// Noise-free final |psi0(T)| of a sweep model with passage time T.
inline double sweep_final(const ExperimentConfig& cfg, double T) {
  ModelSpec m = cfg.model;
  m.passage_time = T;
  SolverConfig s = cfg.solver;
  s.t_end = T;
  s.steps = cfg.steps_given && cfg.solver.steps > 0
                ? cfg.solver.steps
                : resolve_steps(m, NoiseSpec::none(), T);
  if (s.method == Method::ComponentOracle) s.method = Method::AuxiliaryODE;
  const KernelContext ctx = KernelContext::build(m, s.grid());
  return std::abs(solve(ctx, nullptr, s).psi0.back());
}

/// Ensemble-mean final |psi0(T)| of a sweep model under the configured noise.
inline std::pair<double, double> sweep_final_noisy(const ExperimentConfig& cfg, double T) {
  ModelSpec m = cfg.model;
  m.passage_time = T;
  SolverConfig s = cfg.solver;
  s.t_end = T;
  s.steps = cfg.steps_given && cfg.solver.steps > 0
                ? cfg.solver.steps
                : resolve_steps(m, cfg.noise, T);
  const EnsembleResult er = run_ensemble(m, cfg.noise, s, cfg.n_traj, cfg.base_seed);
  return {er.mean_abs_psi0.back(), er.stderr_abs.back()};
}

}  // namespace rundetail

/// `scan-time` verb: noise-free finals over a passage-time list plus the
/// smallest passage time reaching the fidelity target (list resolution and a
/// bisection refinement between the bracketing list entries).
inline RunOutputs scan_passage_time(const ExperimentConfig& cfg) {
  if (!cfg.model.time_bounded())
    throw ConfigError("scan-time requires a sweep model (linear_sweep or model_b)");
  if (cfg.noise.kind != NoiseKind::None)
    throw ConfigError("scan-time is a noise-free scan; set noise.kind = none");
  if (cfg.scan_values.empty()) throw ConfigError("scan-time needs scan.values (list of T)");
  std::vector<double> ts = cfg.scan_values;
  std::sort(ts.begin(), ts.end());
  if (ts.front() <= 0.0) throw ConfigError("scan-time values must be positive");

  RunOutputs out;
  out.summary["command"] = "scan-time";
  out.summary["config"] = rundetail::config_echo(cfg, cfg.solver);
  out.summary["fidelity_target"] = cfg.fidelity_target;

  const std::string csv = rundetail::out_path(cfg, "_scan_time.csv");
  csvdetail::File f(csv);
  std::fprintf(f.f, "T,final_abs_psi0,final_fidelity\n");

  std::vector<double> finals;
  for (double T : ts) {
    const double fin = rundetail::sweep_final(cfg, T);
    finals.push_back(fin);
    std::fprintf(f.f, "%.8e,%.8e,%.8e\n", T, fin, fin * fin);
  }

  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < ts.size(); ++i)
    rows.push_back({{"T", ts[i]}, {"final_abs_psi0", finals[i]}});
  out.summary["scan"] = rows;

  int first = -1;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (finals[i] >= cfg.fidelity_target) {
      first = static_cast<int>(i);
      break;
    }
  if (first < 0) {
    out.summary["threshold"] = {{"reached", false}};
  } else {
    double t_star = ts[static_cast<std::size_t>(first)];
    if (first > 0) {  // refine inside the bracketing interval
      double lo = ts[static_cast<std::size_t>(first - 1)], hi = t_star;
      for (int it = 0; it < 20; ++it) {
        const double mid = 0.5 * (lo + hi);
        (rundetail::sweep_final(cfg, mid) >= cfg.fidelity_target ? hi : lo) = mid;
      }
      t_star = hi;
    }
    out.summary["threshold"] = {{"reached", true},
                                {"smallest_scanned_T", ts[static_cast<std::size_t>(first)]},
                                {"refined_T", t_star}};
  }

  out.files.push_back(csv);
  const std::string sj = rundetail::out_path(cfg, "_summary.json");
  write_summary(sj, out.summary);
  out.files.push_back(sj);
  return out;
}

/// `scan-noise` verb: ensembles over an ascending dephasing-intensity list
/// (gamma = strength^2/j0, must start at 0), monotonicity flags on
/// min_t mean|psi0| and the first gamma saturating the target.
inline RunOutputs scan_noise(const ExperimentConfig& cfg) {
  if (cfg.scan_values.empty()) throw ConfigError("scan-noise needs scan.values (gamma list)");
  const std::vector<double>& gs = cfg.scan_values;
  if (!std::is_sorted(gs.begin(), gs.end()))
    throw ConfigError("scan-noise gamma list must be ascending");
  if (gs.front() != 0.0) throw ConfigError("scan-noise gamma list must include 0");

  RunOutputs out;
  out.summary["command"] = "scan-noise";
  out.summary["config"] = rundetail::config_echo(cfg, cfg.solver);
  out.summary["calibration"] = "gamma = strength^2 / j0";

  const std::string csv = rundetail::out_path(cfg, "_scan_noise.csv");
  csvdetail::File f(csv);
  std::fprintf(f.f, "gamma,strength,min_mean_abs_psi0,stderr_at_min,time_of_min,"
                    "final_mean_abs_psi0,final_stderr,final_purity\n");

  struct Row {
    double gamma, minv, se_min, t_min, fin, se_fin;
  };
  std::vector<Row> rows;
  for (std::size_t gi = 0; gi < gs.size(); ++gi) {
    NoiseSpec ns = NoiseSpec::gaussian_gamma(gs[gi], cfg.noise.seed, cfg.model.j0);
    SolverConfig s = cfg.solver;
    if (!cfg.steps_given || s.steps <= 0)
      s.steps = resolve_steps(cfg.model, ns, s.t_end);
    const EnsembleResult er = run_ensemble(cfg.model, ns, s, cfg.n_traj, cfg.base_seed);
    const Metrics m = metrics(er);
    std::size_t imin = 0;
    for (std::size_t i = 0; i < er.grid.size(); ++i)
      if (er.mean_abs_psi0[i] < er.mean_abs_psi0[imin]) imin = i;
    rows.push_back({gs[gi], m.min_abs_psi0, er.stderr_abs[imin], m.time_of_min,
                    m.final_abs_psi0, er.stderr_abs.back()});
    std::fprintf(f.f, "%.8e,%.8e,%.8e,%.8e,%.8e,%.8e,%.8e,%.8e\n", gs[gi], ns.strength,
                 m.min_abs_psi0, er.stderr_abs[imin], m.time_of_min, m.final_abs_psi0,
                 er.stderr_abs.back(), er.purity.back());
    const std::string ecsv =
        rundetail::out_path(cfg, "_noise" + std::to_string(gi) + "_ensemble.csv");
    write_ensemble_csv(ecsv, er);
    out.files.push_back(ecsv);
  }

  nlohmann::json jrows = nlohmann::json::array();
  bool monotone = true;
  bool monotone_2sigma = true;
  nlohmann::json violations = nlohmann::json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    jrows.push_back({{"gamma", rows[i].gamma},
                     {"min_mean_abs_psi0", rows[i].minv},
                     {"stderr_at_min", rows[i].se_min},
                     {"final_mean_abs_psi0", rows[i].fin}});
    if (i > 0) {
      const double inc = rows[i].minv - rows[i - 1].minv;
      const double se = std::sqrt(sqr(rows[i].se_min) + sqr(rows[i - 1].se_min));
      if (inc < 0.0) {
        monotone = false;
        violations.push_back({{"gamma", rows[i].gamma}, {"decrease", -inc}});
      }
      if (inc < 2.0 * se) monotone_2sigma = false;
    }
  }
  double saturation = -1.0;
  for (const auto& row : rows)
    if (row.minv >= cfg.fidelity_target) {
      saturation = row.gamma;
      break;
    }
  out.summary["scan"] = jrows;
  out.summary["monotone"] = monotone;
  out.summary["monotone_2sigma"] = monotone_2sigma;
  out.summary["violations"] = violations;
  out.summary["saturation_gamma"] = saturation;
  out.summary["saturation_reached"] = saturation >= 0.0;

  out.files.push_back(csv);
  const std::string sj = rundetail::out_path(cfg, "_summary.json");
  write_summary(sj, out.summary);
  out.files.push_back(sj);
  return out;
}

/// `speedup` verb: smallest passage time reaching the fidelity target without
/// noise vs with the configured noise; reports the ratio T_free / T_noisy.
inline RunOutputs speedup_report(const ExperimentConfig& cfg) {
  if (!cfg.model.time_bounded())
    throw ConfigError("speedup requires a sweep model (linear_sweep or model_b)");
  if (cfg.scan_values.empty()) throw ConfigError("speedup needs scan.values (list of T)");
  if (!(cfg.fidelity_target > 0.0 && cfg.fidelity_target < 1.0))
    throw ConfigError("speedup fidelity_target must lie in (0, 1)");
  std::vector<double> ts = cfg.scan_values;
  std::sort(ts.begin(), ts.end());
  if (ts.front() <= 0.0) throw ConfigError("speedup T values must be positive");

  RunOutputs out;
  out.summary["command"] = "speedup";
  out.summary["config"] = rundetail::config_echo(cfg, cfg.solver);
  out.summary["fidelity_target"] = cfg.fidelity_target;

  const std::string csv = rundetail::out_path(cfg, "_speedup.csv");
  csvdetail::File f(csv);
  std::fprintf(f.f, "T,final_free,final_noisy_mean,final_noisy_stderr\n");

  double t_free = -1.0, t_noisy = -1.0;
  for (double T : ts) {
    const double fin_free = rundetail::sweep_final(cfg, T);
    double fin_noisy = fin_free, se_noisy = 0.0;
    if (cfg.noise.kind != NoiseKind::None) {
      const auto [m, se] = rundetail::sweep_final_noisy(cfg, T);
      fin_noisy = m;
      se_noisy = se;
    }
    std::fprintf(f.f, "%.8e,%.8e,%.8e,%.8e\n", T, fin_free, fin_noisy, se_noisy);
    if (t_free < 0.0 && fin_free >= cfg.fidelity_target) t_free = T;
    if (t_noisy < 0.0 && fin_noisy >= cfg.fidelity_target) t_noisy = T;
  }

  out.summary["t_free"] = t_free;
  out.summary["t_noisy"] = t_noisy;
  if (t_free > 0.0 && t_noisy > 0.0) {
    out.summary["reached"] = true;
    out.summary["speedup_ratio"] = t_free / t_noisy;
  } else {
    out.summary["reached"] = false;
    out.summary["speedup_ratio"] = nullptr;
    out.summary["note"] = "fidelity target not reached in the scanned passage-time range";
  }

  out.files.push_back(csv);
  const std::string sj = rundetail::out_path(cfg, "_summary.json");
  write_summary(sj, out.summary);
  out.files.push_back(sj);
  return out;
}

}  // namespace qadia
