#include "crane/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace crane {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (const auto& [key, val] : j.items()) {
    (void)val;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end())
      throw ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

double num(const json& j, const char* key, double fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(std::string("config: missing key '") + key + "'");
    return fallback;
  }
  if (!j.at(key).is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::array<std::optional<double>, kNumSpatialStates> parse_boundary_array(const json& j,
                                                                          const char* which) {
  if (!j.is_array() || j.size() != kNumSpatialStates)
    throw ConfigError(std::string("config: boundary ") + which + " must be an array of " +
                      std::to_string(kNumSpatialStates) + " entries");
  std::array<std::optional<double>, kNumSpatialStates> out{};
  for (int i = 0; i < kNumSpatialStates; ++i) {
    const json& e = j.at(i);
    if (e.is_string() && e.get<std::string>() == "free") continue;
    if (!e.is_number())
      throw ConfigError(std::string("config: boundary ") + which + " entry " + std::to_string(i) +
                        " must be a number or \"free\"");
    out[i] = e.get<double>();
  }
  return out;
}

json profile_to_json(const StackProfile& p) {
  json stacks = json::array();
  for (const auto& s : p.stacks)
    stacks.push_back({{"start", s.start}, {"end", s.end}, {"height", s.height}});
  return {{"rail_height", p.rail_height},
          {"ground_clearance", p.ground_clearance},
          {"stacks", stacks}};
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: document root must be an object");
  reject_unknown(j, {"crane", "grid", "bounds", "profile", "boundary", "solver"}, "root");

  RunConfig cfg;
  if (j.contains("crane")) {
    const json& c = j.at("crane");
    reject_unknown(c, {"m1", "m2", "g", "gamma_t", "gamma_h"}, "crane");
    cfg.params.m1 = num(c, "m1", cfg.params.m1);
    cfg.params.m2 = num(c, "m2", cfg.params.m2);
    cfg.params.g = num(c, "g", cfg.params.g);
    cfg.params.gamma_t = num(c, "gamma_t", cfg.params.gamma_t);
    cfg.params.gamma_h = num(c, "gamma_h", cfg.params.gamma_h);
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    reject_unknown(g, {"k", "xp0", "xpf"}, "grid");
    cfg.grid.k = static_cast<int>(num(g, "k", cfg.grid.k));
    cfg.grid.xp0 = num(g, "xp0", cfg.grid.xp0);
    cfg.grid.xpf = num(g, "xpf", cfg.grid.xpf);
  }
  if (!j.contains("profile")) throw ConfigError("config: missing 'profile' path");
  {
    const std::filesystem::path ref = j.at("profile").get<std::string>();
    const std::filesystem::path path = ref.is_absolute() ? ref : base_dir / ref;
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open profile file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    cfg.profile = parse_profile(ss.str());
  }
  if (j.contains("bounds")) {
    const json& b = j.at("bounds");
    reject_unknown(b, {"l_max", "theta_max", "ft_min", "ft_max", "fh_min", "fh_max", "y_min"},
                   "bounds");
    cfg.state_bounds.l_max = num(b, "l_max", cfg.state_bounds.l_max);
    cfg.state_bounds.theta_max = num(b, "theta_max", cfg.state_bounds.theta_max);
    cfg.input_bounds.ft_min = num(b, "ft_min", cfg.input_bounds.ft_min);
    cfg.input_bounds.ft_max = num(b, "ft_max", cfg.input_bounds.ft_max);
    cfg.input_bounds.fh_min = num(b, "fh_min", cfg.input_bounds.fh_min);
    cfg.input_bounds.fh_max = num(b, "fh_max", cfg.input_bounds.fh_max);
    if (b.contains("y_min")) cfg.profile.ground_clearance = num(b, "y_min", 0.0);
  }
  if (j.contains("boundary")) {
    const json& b = j.at("boundary");
    reject_unknown(b, {"initial", "final"}, "boundary");
    if (b.contains("initial")) cfg.boundary.initial = parse_boundary_array(b.at("initial"), "initial");
    if (b.contains("final")) cfg.boundary.final = parse_boundary_array(b.at("final"), "final");
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    reject_unknown(s, {"kkt_tolerance", "max_iterations", "mu_init", "mu_reduction", "tau",
                       "regularization_floor"},
                   "solver");
    cfg.solver.kkt_tolerance = num(s, "kkt_tolerance", cfg.solver.kkt_tolerance);
    cfg.solver.max_iterations = static_cast<int>(num(s, "max_iterations", cfg.solver.max_iterations));
    cfg.solver.mu_init = num(s, "mu_init", cfg.solver.mu_init);
    cfg.solver.mu_reduction = num(s, "mu_reduction", cfg.solver.mu_reduction);
    cfg.solver.tau = num(s, "tau", cfg.solver.tau);
    cfg.solver.regularization_floor = num(s, "regularization_floor", cfg.solver.regularization_floor);
  }
  try {
    cfg.params.validate();
    cfg.grid.validate();
    cfg.profile.validate();
    cfg.solver.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

OcpSpec make_ocp(const RunConfig& config, double alpha) {
  OcpSpec spec;
  spec.params = config.params;
  spec.grid = config.grid;
  spec.profile = config.profile;
  spec.alpha = alpha;
  spec.boundary = config.boundary;
  spec.input_bounds = config.input_bounds;
  spec.state_bounds = config.state_bounds;
  spec.validate();
  return spec;
}

SolveResult solve_ocp(const OcpSpec& spec, const SolverOptions& opts) {
  return solve_ocp(spec, opts, initial_guess(spec));
}

SolveResult solve_ocp(const OcpSpec& spec, const SolverOptions& opts,
                      const Eigen::VectorXd& w0) {
  const NlpProblem problem = transcribe(spec);
  // Substitute the pinned boundary states out of the program. Solving with
  // pin rows instead leaves the equality Jacobian nearly rank deficient:
  // the pinned zero boundary speed multiplies the first/last-interval
  // dynamics rows, making them nearly parallel to the pins.
  const std::vector<FixedVariable> pins = boundary_pins(spec);
  std::vector<int> pin_rows(pins.size());
  for (size_t i = 0; i < pins.size(); ++i)
    pin_rows[i] = 10 * spec.grid.k + static_cast<int>(i);
  ReducedProblem red = eliminate_fixed(problem, pins, pin_rows);

  SolveResult res;
  SolveOutcome out = solve(red.problem, red.restrict_vars(w0), opts);
  res.outcome = out;
  res.outcome.w = red.expand(out.w);
  res.outcome.multipliers.eq = red.expand_eq(out.multipliers.eq);
  // Recover the pin-row multipliers from full-space stationarity: the pin
  // Jacobian is the unit vector of the pinned variable, so its multiplier
  // equals the remaining Lagrangian gradient component there.
  {
    Eigen::VectorXd r = problem.gradient(res.outcome.w);
    Eigen::SparseMatrix<double> je, ji;
    problem.jacobians(res.outcome.w, je, ji);
    r -= je.transpose() * res.outcome.multipliers.eq;
    r -= ji.transpose() * res.outcome.multipliers.ineq;
    for (size_t i = 0; i < pins.size(); ++i)
      res.outcome.multipliers.eq(pin_rows[i]) = r(pins[i].index);
  }
  // Bound multipliers expand through the variable map; pinned variables
  // carried no bounds in the reduced program.
  res.outcome.multipliers.z_lower = red.expand(out.multipliers.z_lower);
  res.outcome.multipliers.z_upper = red.expand(out.multipliers.z_upper);
  for (const auto& pin : pins) {
    res.outcome.multipliers.z_lower(pin.index) = 0.0;
    res.outcome.multipliers.z_upper(pin.index) = 0.0;
  }
  res.solution = unpack_solution(spec, res.outcome);
  tighten_aux(res.solution, spec.params);
  res.converged = res.outcome.status == SolveStatus::converged;
  return res;
}

std::vector<double> alpha_grid(double amin, double amax, int count) {
  if (count < 2) throw std::domain_error("alpha_grid: need at least 2 points");
  if (!(amin > 0.0 && amax < 1.0 && amin < amax))
    throw std::domain_error("alpha_grid: need 0 < amin < amax < 1");
  const double la = std::log(amin / (1.0 - amin));
  const double lb = std::log(amax / (1.0 - amax));
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) {
    const double l = la + (lb - la) * i / (count - 1);
    out[i] = 1.0 / (1.0 + std::exp(-l));
  }
  return out;
}

SweepResult run_sweep(const RunConfig& config, const std::vector<double>& alphas,
                      bool warm_start) {
  if (alphas.size() < 2) throw std::domain_error("run_sweep: need at least 2 alpha values");
  std::vector<double> sorted = alphas;
  std::sort(sorted.begin(), sorted.end());

  SweepResult sweep;
  Eigen::VectorXd warm;
  bool have_warm = false;
  for (double alpha : sorted) {
    const OcpSpec spec = make_ocp(config, alpha);
    SolveResult res = (warm_start && have_warm) ? solve_ocp(spec, config.solver, warm)
                                                : solve_ocp(spec, config.solver);
    if (warm_start && !res.converged && have_warm) {
      // Fall back to the cold start before giving up on this alpha.
      res = solve_ocp(spec, config.solver);
    }
    if (warm_start && res.converged) {
      warm = res.outcome.w;
      have_warm = true;
    }
    ParetoPoint pt;
    pt.alpha = alpha;
    pt.tf = res.solution.states.back()[sx::t];
    pt.energy = res.solution.states.back()[sx::e_t] + res.solution.states.back()[sx::e_h];
    pt.status = res.solution.status;
    sweep.points.push_back(pt);
    sweep.solves.push_back(std::move(res));
  }

  // Relative columns per the figure convention: time relative to the
  // smallest-alpha converged solution, energy to the largest-alpha one.
  const ParetoPoint* time_ref = nullptr;
  const ParetoPoint* energy_ref = nullptr;
  for (const auto& pt : sweep.points)
    if (pt.status == "converged") {
      if (!time_ref) time_ref = &pt;
      energy_ref = &pt;
    }
  for (auto& pt : sweep.points) {
    pt.rel_time = time_ref && time_ref->tf != 0.0 ? pt.tf / time_ref->tf : 0.0;
    pt.rel_energy = energy_ref && energy_ref->energy != 0.0 ? pt.energy / energy_ref->energy : 0.0;
  }

  // Flag converged rows dominated by another converged row.
  for (auto& pt : sweep.points) {
    if (pt.status != "converged") continue;
    for (const auto& other : sweep.points) {
      if (&other == &pt || other.status != "converged") continue;
      const bool no_worse = other.tf <= pt.tf + 1e-9 && other.energy <= pt.energy + 1e-9;
      const bool better = other.tf < pt.tf - 1e-6 || other.energy < pt.energy - 1e-6;
      if (no_worse && better) {
        pt.status = "converged_dominated";
        break;
      }
    }
  }
  return sweep;
}

std::string solution_to_json(const DiscretizedSolution& sol, const StackProfile& profile) {
  json j;
  j["alpha"] = sol.alpha;
  j["grid"] = {{"k", sol.grid.k}, {"xp0", sol.grid.xp0}, {"xpf", sol.grid.xpf}};
  j["objective"] = sol.objective;
  j["status"] = sol.status;
  j["iterations"] = sol.iterations;
  json states = json::array();
  for (const auto& s : sol.states) states.push_back(std::vector<double>(s.begin(), s.end()));
  j["states"] = states;
  json controls = json::array(), eta_t = json::array(), eta_h = json::array();
  for (const auto& u : sol.controls) controls.push_back({u.f_t, u.f_h});
  for (const auto& e : sol.eta_t) eta_t.push_back({e.eta1, e.eta0});
  for (const auto& e : sol.eta_h) eta_h.push_back({e.eta1, e.eta0});
  j["controls"] = controls;
  j["eta_t"] = eta_t;
  j["eta_h"] = eta_h;
  j["profile"] = profile_to_json(profile);
  return j.dump(2);
}

DiscretizedSolution solution_from_json(const std::string& text, StackProfile* profile_out) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("solution: ") + e.what());
  }
  DiscretizedSolution sol;
  try {
    sol.alpha = j.at("alpha").get<double>();
    sol.grid.k = j.at("grid").at("k").get<int>();
    sol.grid.xp0 = j.at("grid").at("xp0").get<double>();
    sol.grid.xpf = j.at("grid").at("xpf").get<double>();
    sol.objective = j.at("objective").get<double>();
    sol.status = j.at("status").get<std::string>();
    sol.iterations = j.value("iterations", 0);
    for (const auto& s : j.at("states")) {
      SpatialState st;
      if (s.size() != kNumSpatialStates) throw ConfigError("solution: bad state length");
      for (int i = 0; i < kNumSpatialStates; ++i) st[i] = s.at(i).get<double>();
      sol.states.push_back(st);
    }
    for (const auto& u : j.at("controls"))
      sol.controls.push_back({u.at(0).get<double>(), u.at(1).get<double>()});
    for (const auto& e : j.at("eta_t"))
      sol.eta_t.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    for (const auto& e : j.at("eta_h"))
      sol.eta_h.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    if (profile_out && j.contains("profile"))
      *profile_out = parse_profile(j.at("profile").dump());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("solution: ") + e.what());
  }
  if (static_cast<int>(sol.states.size()) != sol.grid.k + 1 ||
      static_cast<int>(sol.controls.size()) != sol.grid.k)
    throw ConfigError("solution: dimensions inconsistent with grid");
  return sol;
}

std::string report_to_json(const ValidationReport& rep) {
  json j;
  j["max_corridor_violation"] = rep.max_corridor_violation;
  j["grid_corridor_violation"] = rep.grid_corridor_violation;
  j["grid_corridor_index"] = rep.grid_corridor_index;
  j["max_input_violation"] = rep.max_input_violation;
  j["final_state_mismatch"] =
      std::vector<double>(rep.final_state_mismatch.begin(), rep.final_state_mismatch.end());
  j["energy_t"] = rep.energy_t;
  j["energy_h"] = rep.energy_h;
  j["energy_discrepancy"] = rep.energy_discrepancy;
  j["sway_extremum"] = rep.sway_extremum;
  return j.dump(2);
}

void write_pareto_csv(const std::vector<ParetoPoint>& points, std::ostream& os) {
  os << "alpha,tf,energy,rel_time,rel_energy,status\n";
  os.precision(12);
  for (const auto& p : points)
    os << p.alpha << ',' << p.tf << ',' << p.energy << ',' << p.rel_time << ','
       << p.rel_energy << ',' << p.status << '\n';
}

std::vector<ParetoPoint> read_pareto_csv(std::istream& is) {
  std::vector<ParetoPoint> out;
  std::string line;
  if (!std::getline(is, line) || line.rfind("alpha,tf,energy", 0) != 0)
    throw ConfigError("pareto: missing header row");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    ParetoPoint p;
    auto next = [&]() {
      if (!std::getline(ss, field, ',')) throw ConfigError("pareto: short row");
      return field;
    };
    p.alpha = std::stod(next());
    p.tf = std::stod(next());
    p.energy = std::stod(next());
    p.rel_time = std::stod(next());
    p.rel_energy = std::stod(next());
    p.status = next();
    out.push_back(p);
  }
  return out;
}

void write_plot_data(const std::vector<ParetoPoint>& pareto,
                     const std::vector<std::pair<DiscretizedSolution, StackProfile>>& solutions,
                     const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "fig4_pareto.csv");
    os << "alpha,rel_time,rel_energy,status\n";
    os.precision(12);
    for (const auto& p : pareto)
      os << p.alpha << ',' << p.rel_time << ',' << p.rel_energy << ',' << p.status << '\n';
  }
  std::ofstream traj(out_dir / "fig5_trajectory.csv");
  std::ofstream inputs(out_dir / "fig6_inputs.csv");
  std::ofstream energy(out_dir / "fig7_energy.csv");
  std::ofstream hoist(out_dir / "fig8_hoist_sway.csv");
  traj << "series,alpha,x_p,y\n";
  inputs << "alpha,x_p,f_t,f_h\n";
  energy << "alpha,x_p,e_t,e_h,e_total\n";
  hoist << "alpha,x_p,l,theta\n";
  traj.precision(12);
  inputs.precision(12);
  energy.precision(12);
  hoist.precision(12);

  bool outline_done = false;
  for (const auto& [sol, profile] : solutions) {
    if (!outline_done) {
      for (const auto& s : profile.stacks) {
        traj << "stack,," << s.start << ',' << 0.0 << '\n';
        traj << "stack,," << s.start << ',' << s.height << '\n';
        traj << "stack,," << s.end << ',' << s.height << '\n';
        traj << "stack,," << s.end << ',' << 0.0 << '\n';
      }
      outline_done = true;
    }
    for (int i = 0; i <= sol.grid.k; ++i) {
      const double xp = sol.grid.point(i);
      traj << "payload," << sol.alpha << ',' << xp << ',' << sol.states[i][sx::y_p] << '\n';
      energy << sol.alpha << ',' << xp << ',' << sol.states[i][sx::e_t] << ','
             << sol.states[i][sx::e_h] << ','
             << sol.states[i][sx::e_t] + sol.states[i][sx::e_h] << '\n';
      hoist << sol.alpha << ',' << xp << ',' << sol.states[i][sx::l] << ','
            << sol.states[i][sx::theta] << '\n';
    }
    for (int i = 0; i < sol.grid.k; ++i)
      inputs << sol.alpha << ',' << sol.grid.point(i) << ',' << sol.controls[i].f_t << ','
             << sol.controls[i].f_h << '\n';
  }
}

}  // namespace crane
