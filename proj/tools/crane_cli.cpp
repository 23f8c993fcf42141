#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crane/harness.hpp"

namespace fs = std::filesystem;
using namespace crane;

namespace {

// Machine-readable error on stderr, human-free exit codes:
// 1 solver non-convergence, 2 configuration/I-O, 3 validation violation.
int fail(int code, const std::string& message) {
  nlohmann::json j{{"error", message}, {"code", code}};
  std::cerr << j.dump() << std::endl;
  return code;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int cmd_solve(const std::string& config_path, double alpha, const std::string& out_dir,
              bool verbose) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    return fail(2, "alpha must lie in [0,1], got " + std::to_string(alpha));
  RunConfig config;
  try {
    config = load_config(config_path);
  } catch (const std::exception& e) {
    return fail(2, e.what());
  }
  try {
    OcpSpec spec = make_ocp(config, alpha);
    SolverOptions opts = config.solver;
    opts.verbose = verbose;
    opts.log_stream = verbose ? &std::cerr : nullptr;
    const SolveResult res = solve_ocp(spec, opts);
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "solution.json",
               solution_to_json(res.solution, spec.profile));
    if (!res.converged) return fail(1, "solver did not converge: " + res.solution.status);

    const double tf = res.solution.states.back()[sx::t];
    const double dt = tf / 5000.0;
    const ValidationReport rep = validate(res.solution, spec, dt);
    write_file(fs::path(out_dir) / "report.json", report_to_json(rep));
    const PiecewiseControl pc = reconstruct_controls(res.solution);
    const TimeTrajectory traj =
        integrate([&pc](double t) { return pc.at(t); },
                  time_state_from_spatial(res.solution.states.front(), spec.grid.xp0),
                  spec.params, tf, dt);
    std::ofstream os(fs::path(out_dir) / "trajectory.csv");
    export_trajectory(traj, os);
    std::cout << "objective " << res.solution.objective << "  tf " << tf << "  energy "
              << res.solution.states.back()[sx::e_t] + res.solution.states.back()[sx::e_h]
              << "  iterations " << res.solution.iterations << "\n";
    return 0;
  } catch (const ConfigError& e) {
    return fail(2, e.what());
  } catch (const std::exception& e) {
    return fail(1, e.what());
  }
}

int cmd_sweep(const std::string& config_path, double alpha_min, double alpha_max, int count,
              bool warm_start, const std::string& out_dir) {
  RunConfig config;
  std::vector<double> alphas;
  try {
    config = load_config(config_path);
    alphas = alpha_grid(alpha_min, alpha_max, count);
  } catch (const std::exception& e) {
    return fail(2, e.what());
  }
  try {
    const SweepResult sweep = run_sweep(config, alphas, warm_start);
    fs::create_directories(out_dir);
    std::ofstream os(fs::path(out_dir) / "pareto.csv");
    write_pareto_csv(sweep.points, os);
    for (size_t i = 0; i < sweep.solves.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "solution_%02zu.json", i);
      write_file(fs::path(out_dir) / name,
                 solution_to_json(sweep.solves[i].solution, config.profile));
    }
    int failures = 0;
    for (const auto& p : sweep.points)
      if (p.status != "converged" && p.status != "converged_dominated") ++failures;
    std::cout << sweep.points.size() << " alphas, " << failures << " failures\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(1, e.what());
  }
}

int cmd_validate(const std::string& solution_path, const std::string& config_path, double dt,
                 const std::string& out_path) {
  DiscretizedSolution sol;
  RunConfig config;
  try {
    sol = solution_from_json(read_file(solution_path), nullptr);
    config = load_config(config_path);
  } catch (const std::exception& e) {
    return fail(2, e.what());
  }
  try {
    const OcpSpec spec = make_ocp(config, sol.alpha);
    const double tf = sol.states.back()[sx::t];
    const ValidationReport rep = validate(sol, spec, dt > 0.0 ? dt : tf / 5000.0);
    const std::string out =
        out_path.empty() ? (fs::path(solution_path).parent_path() / "report.json").string()
                         : out_path;
    write_file(out, report_to_json(rep));
    std::cout << report_to_json(rep) << "\n";
    if (rep.grid_corridor_violation > 1e-6)
      return fail(3, "corridor bound violated at grid index " +
                         std::to_string(rep.grid_corridor_index));
    if (rep.max_corridor_violation > 1e-3)
      return fail(3, "continuous trajectory penetrates a stack");
    if (rep.max_input_violation > 1e-6) return fail(3, "input bounds violated");
    if (rep.energy_discrepancy > 0.02) return fail(3, "epigraph energy disagrees with oracle");
    if (rep.sway_extremum > config.state_bounds.theta_max + 1e-3)
      return fail(3, "sway bound violated");
    return 0;
  } catch (const ConfigError& e) {
    return fail(2, e.what());
  } catch (const std::exception& e) {
    return fail(2, e.what());
  }
}

int cmd_plotdata(const std::string& in_path, const std::string& out_dir) {
  try {
    std::vector<ParetoPoint> pareto;
    std::vector<std::pair<DiscretizedSolution, StackProfile>> solutions;
    const fs::path in(in_path);
    auto load_solution = [&](const fs::path& p) {
      StackProfile profile;
      DiscretizedSolution sol = solution_from_json(read_file(p), &profile);
      solutions.emplace_back(std::move(sol), profile);
    };
    if (fs::is_directory(in)) {
      if (fs::exists(in / "pareto.csv")) {
        std::ifstream is(in / "pareto.csv");
        pareto = read_pareto_csv(is);
      }
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(in))
        if (e.path().extension() == ".json" &&
            e.path().filename().string().rfind("solution", 0) == 0)
          files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) load_solution(f);
    } else {
      load_solution(in);
    }
    if (pareto.empty() && solutions.empty()) return fail(2, "no pareto.csv or solution files in " + in_path);
    write_plot_data(pareto, solutions, out_dir);
    return 0;
  } catch (const std::exception& e) {
    return fail(2, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time/energy-optimal ship-to-shore crane trajectories"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", solution_path, in_path, report_path;
  double alpha = 0.5, alpha_min = 0.01, alpha_max = 0.99, dt = 0.0;
  int count = 25;
  bool warm_start = true, verbose = false;

  auto* solve_cmd = app.add_subcommand("solve", "Solve one alpha and validate it");
  solve_cmd->add_option("--config", config_path)->required();
  solve_cmd->add_option("--alpha", alpha);
  solve_cmd->add_option("--out", out_dir);
  solve_cmd->add_flag("--verbose", verbose);

  auto* sweep_cmd = app.add_subcommand("sweep", "Alpha sweep producing Pareto data");
  sweep_cmd->add_option("--config", config_path)->required();
  sweep_cmd->add_option("--alpha-min", alpha_min);
  sweep_cmd->add_option("--alpha-max", alpha_max);
  sweep_cmd->add_option("--count", count);
  sweep_cmd->add_flag("--warm-start,!--no-warm-start", warm_start);
  sweep_cmd->add_option("--out", out_dir);

  auto* validate_cmd = app.add_subcommand("validate", "Time-domain re-simulation checks");
  validate_cmd->add_option("--solution", solution_path)->required();
  validate_cmd->add_option("--config", config_path)->required();
  validate_cmd->add_option("--dt", dt);
  validate_cmd->add_option("--out", report_path);

  auto* plot_cmd = app.add_subcommand("plotdata", "Emit figure data series");
  plot_cmd->add_option("--in", in_path)->required();
  plot_cmd->add_option("--out", out_dir);

  CLI11_PARSE(app, argc, argv);

  if (solve_cmd->parsed()) return cmd_solve(config_path, alpha, out_dir, verbose);
  if (sweep_cmd->parsed()) return cmd_sweep(config_path, alpha_min, alpha_max, count, warm_start, out_dir);
  if (validate_cmd->parsed()) return cmd_validate(solution_path, config_path, dt, report_path);
  if (plot_cmd->parsed()) return cmd_plotdata(in_path, out_dir);
  return 2;
}
