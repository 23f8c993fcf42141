#include "crane/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace crane {

namespace {

TimeState axpy(const TimeState& x, double a, const std::array<double, 8>& d) {
  TimeState r = x;
  r.x_p += a * d[0];
  r.x_p_dot += a * d[1];
  r.y_p += a * d[2];
  r.y_p_dot += a * d[3];
  r.l += a * d[4];
  r.l_dot += a * d[5];
  r.theta += a * d[6];
  r.theta_dot += a * d[7];
  return r;
}

double max_abs_state(const TimeState& x) {
  return std::max({std::abs(x.x_p), std::abs(x.x_p_dot), std::abs(x.y_p), std::abs(x.y_p_dot),
                   std::abs(x.l), std::abs(x.l_dot), std::abs(x.theta), std::abs(x.theta_dot)});
}

}  // namespace

Control PiecewiseControl::at(double t) const {
  if (values.empty()) throw std::logic_error("PiecewiseControl: empty");
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  const auto idx = std::clamp<std::ptrdiff_t>(it - breakpoints.begin() - 1, 0,
                                              static_cast<std::ptrdiff_t>(values.size()) - 1);
  return values[idx];
}

PiecewiseControl reconstruct_controls(const DiscretizedSolution& sol) {
  PiecewiseControl pc;
  pc.breakpoints.reserve(sol.states.size());
  for (const auto& s : sol.states) pc.breakpoints.push_back(s[sx::t]);
  for (size_t i = 1; i < pc.breakpoints.size(); ++i) {
    if (!(pc.breakpoints[i] > pc.breakpoints[i - 1]))
      throw std::runtime_error("reconstruct_controls: solved time not strictly increasing at grid point " +
                               std::to_string(i));
  }
  pc.values = sol.controls;
  return pc;
}

TimeTrajectory integrate(const std::function<Control(double)>& control, const TimeState& x0,
                         const CraneParams& params, double t_end, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("integrate: dt must be positive");
  if (!(x0.l > 0.0)) throw std::domain_error("integrate: initial rope length l <= 0");

  TimeTrajectory traj;
  const int steps = std::max(1, static_cast<int>(std::ceil(t_end / dt - 1e-12)));
  const double h = t_end / steps;

  TimeState x = x0;
  double time = 0.0;
  double acc_t = 0.0, acc_h = 0.0;
  PowerPair prev_flow{0.0, 0.0};

  auto sample = [&](bool first) {
    const Control u = control(time);
    const PowerPair pw = actuator_power(x, u);
    const PowerPair flow{regen_power_flow(pw.p_t, params.gamma_t),
                         regen_power_flow(pw.p_h, params.gamma_h)};
    if (!first) {
      acc_t += 0.5 * h * (prev_flow.p_t + flow.p_t);
      acc_h += 0.5 * h * (prev_flow.p_h + flow.p_h);
    }
    prev_flow = flow;
    traj.t.push_back(time);
    traj.states.push_back(x);
    traj.controls.push_back(u);
    traj.powers.push_back(pw);
    traj.e_t.push_back(acc_t);
    traj.e_h.push_back(acc_h);
    traj.e_mech.push_back(mechanical_energy(x, params));
  };

  const auto deriv = [&params](const TimeState& xs, const Control& us) {
    if (!(xs.l > 0.0)) throw std::runtime_error("integrate: rope length reached zero");
    return time_derivatives(xs, us, params);
  };

  sample(true);
  for (int i = 0; i < steps; ++i) {
    const Control u1 = control(time);
    const Control u2 = control(time + 0.5 * h);
    const Control u3 = control(time + h);
    const auto k1 = deriv(x, u1);
    const auto k2 = deriv(axpy(x, 0.5 * h, k1), u2);
    const auto k3 = deriv(axpy(x, 0.5 * h, k2), u2);
    const auto k4 = deriv(axpy(x, h, k3), u3);
    std::array<double, 8> incr;
    for (int j = 0; j < 8; ++j) incr[j] = (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0;
    x = axpy(x, h, incr);
    time = (i + 1) * h;
    if (max_abs_state(x) > 1e6) throw std::runtime_error("integrate: state blow-up");
    if (!(x.l > 0.0)) throw std::runtime_error("integrate: rope length reached zero");
    sample(false);
  }
  return traj;
}

ValidationReport validate(const DiscretizedSolution& sol, const OcpSpec& spec, double dt) {
  const PiecewiseControl pc = reconstruct_controls(sol);
  const TimeState x0 = time_state_from_spatial(sol.states.front(), sol.grid.xp0);
  const double t_end = sol.states.back()[sx::t];
  const TimeTrajectory traj =
      integrate([&pc](double t) { return pc.at(t); }, x0, spec.params, t_end, dt);

  ValidationReport rep;
  for (size_t i = 0; i < traj.t.size(); ++i) {
    const TimeState& x = traj.states[i];
    if (x.x_p >= sol.grid.xp0 && x.x_p <= sol.grid.xpf) {
      const double ceiling = spec.profile.rail_height - height_at(spec.profile, x.x_p);
      rep.max_corridor_violation =
          std::max({rep.max_corridor_violation, x.y_p - ceiling,
                    spec.profile.ground_clearance - x.y_p});
    }
    rep.sway_extremum = std::max(rep.sway_extremum, std::abs(x.theta));
  }
  for (const Control& u : sol.controls) {
    rep.max_input_violation =
        std::max({rep.max_input_violation, spec.input_bounds.ft_min - u.f_t,
                  u.f_t - spec.input_bounds.ft_max, spec.input_bounds.fh_min - u.f_h,
                  u.f_h - spec.input_bounds.fh_max});
  }
  rep.max_input_violation = std::max(rep.max_input_violation, 0.0);
  rep.max_corridor_violation = std::max(rep.max_corridor_violation, 0.0);

  const CorridorBounds cb = corridor_bounds(spec.profile, sol.grid);
  for (int i = 0; i <= sol.grid.k; ++i) {
    const double y = sol.states[i][sx::y_p];
    const double viol = std::max(cb.lower[i] - y, y - cb.upper[i]);
    if (viol > rep.grid_corridor_violation) {
      rep.grid_corridor_violation = viol;
      rep.grid_corridor_index = i;
    }
  }

  const TimeState& xf = traj.states.back();
  const SpatialState& sf = sol.states.back();
  rep.final_state_mismatch = {xf.x_p - sol.grid.xpf,
                              xf.x_p_dot - sf[sx::x_p_dot],
                              xf.y_p - sf[sx::y_p],
                              xf.y_p_dot - sf[sx::y_p_dot],
                              xf.l - sf[sx::l],
                              xf.l_dot - sf[sx::l_dot],
                              xf.theta - sf[sx::theta],
                              xf.theta_dot - sf[sx::theta_dot]};

  rep.energy_t = traj.e_t.back();
  rep.energy_h = traj.e_h.back();
  const double epigraph_energy = sf[sx::e_t] + sf[sx::e_h];
  const double oracle_energy = rep.energy_t + rep.energy_h;
  rep.energy_discrepancy =
      std::abs(oracle_energy - epigraph_energy) / std::max(std::abs(oracle_energy), 1e-9);
  return rep;
}

void export_trajectory(const TimeTrajectory& traj, std::ostream& os) {
  os << "t,x_p,x_p_dot,y_p,y_p_dot,l,l_dot,theta,theta_dot,f_t,f_h,p_t,p_h,e_t,e_h\n";
  os.precision(12);
  for (size_t i = 0; i < traj.t.size(); ++i) {
    const TimeState& x = traj.states[i];
    os << traj.t[i] << ',' << x.x_p << ',' << x.x_p_dot << ',' << x.y_p << ',' << x.y_p_dot
       << ',' << x.l << ',' << x.l_dot << ',' << x.theta << ',' << x.theta_dot << ','
       << traj.controls[i].f_t << ',' << traj.controls[i].f_h << ',' << traj.powers[i].p_t
       << ',' << traj.powers[i].p_h << ',' << traj.e_t[i] << ',' << traj.e_h[i] << '\n';
  }
}

}  // namespace crane
