#ifndef CRANE_HARNESS_HPP
#define CRANE_HARNESS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "crane/oracle.hpp"
#include "crane/transcribe.hpp"

namespace crane {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A complete problem configuration: everything in OcpSpec except alpha,
// plus the solver settings.
struct RunConfig {
  CraneParams params;
  SpatialGrid grid;
  StackProfile profile;
  BoundarySpec boundary;
  InputBounds input_bounds;
  StateBounds state_bounds;
  SolverOptions solver;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

OcpSpec make_ocp(const RunConfig& config, double alpha);

struct SolveResult {
  DiscretizedSolution solution;
  SolveOutcome outcome;
  bool converged = false;
};

SolveResult solve_ocp(const OcpSpec& spec, const SolverOptions& opts);
SolveResult solve_ocp(const OcpSpec& spec, const SolverOptions& opts,
                      const Eigen::VectorXd& w0);

struct ParetoPoint {
  double alpha = 0.0;
  double tf = 0.0;
  double energy = 0.0;
  double rel_time = 0.0;
  double rel_energy = 0.0;
  std::string status;
};

struct SweepResult {
  std::vector<ParetoPoint> points;
  std::vector<SolveResult> solves;  // same order as points
};

// Logit-spaced alpha grid on [amin, amax].
std::vector<double> alpha_grid(double amin, double amax, int count);

// Solve each alpha in ascending order, warm-starting from the previous
// converged solution; fills the Fig-4-style relative columns and flags
// dominated converged rows.
SweepResult run_sweep(const RunConfig& config, const std::vector<double>& alphas,
                      bool warm_start);

std::string solution_to_json(const DiscretizedSolution& sol, const StackProfile& profile);
DiscretizedSolution solution_from_json(const std::string& text, StackProfile* profile_out);

std::string report_to_json(const ValidationReport& rep);

void write_pareto_csv(const std::vector<ParetoPoint>& points, std::ostream& os);
std::vector<ParetoPoint> read_pareto_csv(std::istream& is);

// Figure-content emission: pareto scatter, payload trajectory with stack
// outline, inputs, accumulated energy, hoist and sway.
void write_plot_data(const std::vector<ParetoPoint>& pareto,
                     const std::vector<std::pair<DiscretizedSolution, StackProfile>>& solutions,
                     const std::filesystem::path& out_dir);

}  // namespace crane

#endif  // CRANE_HARNESS_HPP
