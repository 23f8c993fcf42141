#ifndef CRANE_ORACLE_HPP
#define CRANE_ORACLE_HPP

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "crane/transcribe.hpp"

namespace crane {

// Zero-order-hold control of time, reconstructed from a spatial solution
// by inverting the solved monotone map t(x_p).
struct PiecewiseControl {
  std::vector<double> breakpoints;  // K+1 times, strictly increasing
  std::vector<Control> values;      // K

  double t_end() const { return breakpoints.back(); }
  Control at(double t) const;
};

PiecewiseControl reconstruct_controls(const DiscretizedSolution& sol);

struct TimeTrajectory {
  std::vector<double> t;
  std::vector<TimeState> states;
  std::vector<Control> controls;
  std::vector<PowerPair> powers;
  std::vector<double> e_t;     // cumulative regenerated trolley flow (J)
  std::vector<double> e_h;     // cumulative regenerated hoist flow (J)
  std::vector<double> e_mech;  // mechanical energy at the sample (J)
};

// Classical fixed-step 4th-order integration of the time-domain model,
// with trapezoidal accumulation of the regenerated power flows.
TimeTrajectory integrate(const std::function<Control(double)>& control, const TimeState& x0,
                         const CraneParams& params, double t_end, double dt);

struct ValidationReport {
  double max_corridor_violation = 0.0;  // m, continuous trajectory vs height_at
  double grid_corridor_violation = 0.0; // m, solved grid states vs corridor bounds
  int grid_corridor_index = -1;         // worst grid point, -1 if clean
  double max_input_violation = 0.0;
  std::array<double, 8> final_state_mismatch{};  // vs the solved final grid state
  double energy_t = 0.0;
  double energy_h = 0.0;
  double energy_discrepancy = 0.0;  // relative, vs (x9 + x10)(xpf)
  double sway_extremum = 0.0;       // rad
};

// Re-simulate the solved controls in the time domain and check the
// continuous trajectory against the profile, the input boxes, and the
// epigraph energy states.
ValidationReport validate(const DiscretizedSolution& sol, const OcpSpec& spec, double dt);

// Delimited-text export, one row per sample:
// t,x_p,x_p_dot,y_p,y_p_dot,l,l_dot,theta,theta_dot,f_t,f_h,p_t,p_h,e_t,e_h
void export_trajectory(const TimeTrajectory& traj, std::ostream& os);

}  // namespace crane

#endif  // CRANE_ORACLE_HPP
