// Acceptance battery: one pass/fail line per criterion, nonzero exit if
// any criterion fails. Expensive solves are shared between criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "crane/harness.hpp"

using namespace crane;
namespace chrono = std::chrono;

namespace {

const std::filesystem::path kDataDir = CRANE_DATA_DIR;

int g_failures = 0;

double now_seconds() {
  return chrono::duration<double>(chrono::steady_clock::now().time_since_epoch()).count();
}

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%2d] %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

struct Shared {
  RunConfig config;
  std::map<double, SolveResult> solves_k50;  // cold solves at K=50
  std::map<double, double> solve_seconds;

  const SolveResult& solve50(double alpha) {
    auto it = solves_k50.find(alpha);
    if (it != solves_k50.end()) return it->second;
    const OcpSpec spec = make_ocp(config, alpha);
    const double t0 = now_seconds();
    SolveResult res = solve_ocp(spec, config.solver);
    solve_seconds[alpha] = now_seconds() - t0;
    return solves_k50.emplace(alpha, std::move(res)).first->second;
  }
};

// ---------------------------------------------------------------- 1 ----

void criterion_1_conservation() {
  const double t0 = now_seconds();
  CraneParams p;
  p.m1 = 1.0;
  p.m2 = 0.5;
  p.gamma_t = 1.0;
  p.gamma_h = 1.0;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u01(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double a_t = 0.5 * u01(rng);
    const double a_h = 1.5 * u01(rng);
    const double w_t = 2.0 + 2.0 * std::abs(u01(rng));
    const double w_h = 2.0 + 2.0 * std::abs(u01(rng));
    const double t_end = 1.2;
    const double hover = p.m2 * p.g;
    // Hann window makes the excitation rest-to-rest in the controls.
    auto control = [&](double t) {
      const double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * t / t_end));
      return Control{a_t * std::sin(w_t * t) * w, hover + a_h * std::sin(w_h * t) * w};
    };
    TimeState x0;
    x0.y_p = 0.6;
    x0.l = 0.6;  // consistent hang at rest
    const TimeTrajectory traj = integrate(control, x0, p, t_end, t_end / 20000.0);
    const double work = traj.e_t.back() + traj.e_h.back();
    const double de = traj.e_mech.back() - traj.e_mech.front();
    double scale = 0.0;
    for (size_t i = 0; i < traj.t.size(); ++i)
      scale = std::max(scale, std::abs(traj.e_t[i]) + std::abs(traj.e_h[i]));
    worst = std::max(worst, std::abs(work - de) / std::max(1.0, scale));
  }
  const double secs = now_seconds() - t0;
  report(1, worst <= 1e-5 && secs < 10.0,
         fmt("dynamics conservation: max defect %.2e (tol 1e-05), %.1f s", worst, secs));
}

// ---------------------------------------------------------------- 2 ----

void criterion_2_equivalence() {
  CraneParams p;
  p.m2 = 0.5;
  TimeState x0;
  x0.x_p_dot = 0.6;
  x0.y_p = 0.5;
  x0.l = 0.5;
  auto control = [&](double t) {
    return Control{0.3 * std::sin(2.1 * t), p.m2 * p.g + 0.4 * std::sin(3.3 * t)};
  };
  const double t_end = 1.2;
  const TimeTrajectory traj = integrate(control, x0, p, t_end, t_end / 9990.0);
  double worst = 0.0;
  int samples = 0;
  for (size_t i = 0; i < traj.t.size() && samples < 1000; i += 10, ++samples) {
    const TimeState& x = traj.states[i];
    if (x.x_p_dot < 0.1) continue;
    const Control u = traj.controls[i];
    const auto dx = time_derivatives(x, u, p);
    const PowerPair pw = traj.powers[i];
    SpatialState s{};
    s[sx::t] = traj.t[i];
    s[sx::x_p_dot] = x.x_p_dot;
    s[sx::y_p] = x.y_p;
    s[sx::y_p_dot] = x.y_p_dot;
    s[sx::l] = x.l;
    s[sx::l_dot] = x.l_dot;
    s[sx::theta] = x.theta;
    s[sx::theta_dot] = x.theta_dot;
    SpatialVec<double> sp;
    sp[0] = 1.0 / x.x_p_dot;
    for (int j = 1; j < 8; ++j) sp[j] = dx[j] / x.x_p_dot;
    sp[8] = pw.p_t / x.x_p_dot;
    sp[9] = pw.p_h / x.x_p_dot;
    const auto r = implicit_residual(s, sp, u, pw.p_t, pw.p_h, p);
    for (double v : r) worst = std::max(worst, std::abs(v));
  }
  report(2, samples >= 1000 && worst <= 1e-6,
         fmt("time-space equivalence: %d samples, max residual %.2e (tol 1e-06)", samples,
             worst));
}

// ---------------------------------------------------------------- 3 ----

void criterion_3_derivatives(Shared& sh) {
  RunConfig cfg = sh.config;
  cfg.grid.k = 25;
  const OcpSpec spec = make_ocp(cfg, 0.5);
  const NlpProblem prob = transcribe(spec);
  const VariableLayout layout{25};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u01(-1.0, 1.0);
  const double h = 1e-6;
  double worst = 0.0;
  Eigen::VectorXd ce_p, ci_p, ce_m, ci_m;
  for (int pt = 0; pt < 50; ++pt) {
    Eigen::VectorXd w = initial_guess(spec);
    for (int i = 0; i < prob.num_vars; ++i) w(i) += 0.05 * u01(rng);
    for (int i = 0; i <= 25; ++i)  // keep rope length well away from zero
      w(layout.state(i, sx::l)) = 0.4 + 0.2 * std::abs(u01(rng));
    const Derivatives d = evaluate_derivatives(prob, w);
    const Eigen::MatrixXd je(d.jac_eq), ji(d.jac_ineq);
    for (int col = 0; col < prob.num_vars; ++col) {
      Eigen::VectorXd wp = w, wm = w;
      wp(col) += h;
      wm(col) -= h;
      prob.constraints(wp, ce_p, ci_p);
      prob.constraints(wm, ce_m, ci_m);
      for (int r = 0; r < prob.num_eq; ++r) {
        const double fd = (ce_p(r) - ce_m(r)) / (2.0 * h);
        worst = std::max(worst, std::abs(je(r, col) - fd) / std::max(1.0, std::abs(fd)));
      }
      for (int r = 0; r < prob.num_ineq; ++r) {
        const double fd = (ci_p(r) - ci_m(r)) / (2.0 * h);
        worst = std::max(worst, std::abs(ji(r, col) - fd) / std::max(1.0, std::abs(fd)));
      }
    }
  }
  report(3, worst <= 1e-5,
         fmt("derivative exactness: max relative error %.2e over 50 points (tol 1e-05)",
             worst));
}

// ---------------------------------------------------------------- 4 ----

void criterion_4_solver_battery() {
  bool ok = true;
  std::string detail = "solver battery:";
  const auto run = [&](const char* name, const NlpProblem& p, const Eigen::VectorXd& w0,
                       const Eigen::VectorXd& expect) {
    const double t0 = now_seconds();
    const SolveOutcome out = solve(p, w0);
    const double secs = now_seconds() - t0;
    const double err = (out.w - expect).cwiseAbs().maxCoeff();
    const bool pass = out.status == SolveStatus::converged && err <= 1e-6 && secs < 1.0;
    ok = ok && pass;
    detail += fmt(" %s err %.1e %.2fs", name, err, secs);
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  {
    NlpProblem p;  // bound QP: min (x-2)^2 s.t. x <= 1
    p.num_vars = 1;
    p.lb = Eigen::VectorXd::Constant(1, -inf);
    p.ub = Eigen::VectorXd::Constant(1, 1.0);
    p.objective = [](const Eigen::VectorXd& w) { return (w(0) - 2.0) * (w(0) - 2.0); };
    p.gradient = [](const Eigen::VectorXd& w) {
      return Eigen::VectorXd::Constant(1, 2.0 * (w(0) - 2.0)).eval();
    };
    p.constraints = [](const Eigen::VectorXd&, Eigen::VectorXd& ce, Eigen::VectorXd& ci) {
      ce.resize(0);
      ci.resize(0);
    };
    p.jacobians = [](const Eigen::VectorXd&, Eigen::SparseMatrix<double>& je,
                     Eigen::SparseMatrix<double>& ji) {
      je.resize(0, 1);
      ji.resize(0, 1);
    };
    run("bound-QP", p, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 1.0));
  }
  {
    NlpProblem p;  // equality QP: min x^2+y^2 s.t. x+y=1
    p.num_vars = 2;
    p.num_eq = 1;
    p.lb = Eigen::VectorXd::Constant(2, -inf);
    p.ub = Eigen::VectorXd::Constant(2, inf);
    p.objective = [](const Eigen::VectorXd& w) { return w.squaredNorm(); };
    p.gradient = [](const Eigen::VectorXd& w) { return (2.0 * w).eval(); };
    p.constraints = [](const Eigen::VectorXd& w, Eigen::VectorXd& ce, Eigen::VectorXd& ci) {
      ce.resize(1);
      ce(0) = w(0) + w(1) - 1.0;
      ci.resize(0);
    };
    p.jacobians = [](const Eigen::VectorXd&, Eigen::SparseMatrix<double>& je,
                     Eigen::SparseMatrix<double>& ji) {
      je.resize(1, 2);
      je.insert(0, 0) = 1.0;
      je.insert(0, 1) = 1.0;
      ji.resize(0, 2);
    };
    p.eq_pattern = {{0, 0}, {0, 1}};
    Eigen::VectorXd expect(2);
    expect << 0.5, 0.5;
    run("equality-QP", p, Eigen::VectorXd::Zero(2), expect);
  }
  {
    NlpProblem p;  // Rosenbrock
    p.num_vars = 2;
    p.lb = Eigen::VectorXd::Constant(2, -inf);
    p.ub = Eigen::VectorXd::Constant(2, inf);
    p.objective = [](const Eigen::VectorXd& w) {
      const double a = 1.0 - w(0), b = w(1) - w(0) * w(0);
      return a * a + 100.0 * b * b;
    };
    p.gradient = [](const Eigen::VectorXd& w) {
      const double b = w(1) - w(0) * w(0);
      Eigen::VectorXd g(2);
      g(0) = -2.0 * (1.0 - w(0)) - 400.0 * w(0) * b;
      g(1) = 200.0 * b;
      return g;
    };
    p.constraints = [](const Eigen::VectorXd&, Eigen::VectorXd& ce, Eigen::VectorXd& ci) {
      ce.resize(0);
      ci.resize(0);
    };
    p.jacobians = [](const Eigen::VectorXd&, Eigen::SparseMatrix<double>& je,
                     Eigen::SparseMatrix<double>& ji) {
      je.resize(0, 2);
      ji.resize(0, 2);
    };
    Eigen::VectorXd w0(2), expect(2);
    w0 << -1.2, 1.0;
    expect << 1.0, 1.0;
    run("rosenbrock", p, w0, expect);
  }
  report(4, ok, detail);
}

// ---------------------------------------------------------------- 5 ----

void criterion_5_end_to_end(Shared& sh) {
  bool ok = true;
  std::string detail = "end-to-end K=50:";
  for (double alpha : {0.01, 0.5, 0.99}) {
    const SolveResult& res = sh.solve50(alpha);
    const double secs = sh.solve_seconds[alpha];
    const bool pass = res.converged && secs < 60.0;
    ok = ok && pass;
    detail += fmt(" a=%.2f %s %d it %.1fs J=%.4f;", alpha, res.solution.status.c_str(),
                  res.solution.iterations, secs, res.solution.objective);
  }
  report(5, ok, detail);
}

// ---------------------------------------------------------------- 6 ----

void criterion_6_tightness(Shared& sh) {
  bool ok = true;
  std::string detail = "epigraph tightness:";
  for (double alpha : {0.01, 0.5, 0.99}) {
    if (1.0 - alpha < 0.01) continue;
    const SolveResult& res = sh.solve50(alpha);
    if (!res.converged) {
      ok = false;
      detail += fmt(" a=%.2f not converged;", alpha);
      continue;
    }
    const TightnessReport rep = tightness_report(res.solution, sh.config.params);
    double power_scale = 1e-6;
    for (int i = 0; i < res.solution.grid.k; ++i) {
      for (const SpatialState& s : {res.solution.states[i], res.solution.states[i + 1]}) {
        const PowerPair pw =
            actuator_power(time_state_from_spatial(s, 0.0), res.solution.controls[i]);
        power_scale = std::max({power_scale, std::abs(pw.p_t), std::abs(pw.p_h)});
      }
    }
    const bool pass = rep.max_gap <= 1e-4 * power_scale;
    ok = ok && pass;
    detail += fmt(" a=%.2f gap %.2e scale %.2f (tol %.1e);", alpha, rep.max_gap, power_scale,
                  1e-4 * power_scale);
  }
  report(6, ok, detail);
}

// ------------------------------------------------------------- 7, 8 ----

void criteria_7_8_oracle(Shared& sh) {
  bool ok7 = true, ok8 = true;
  std::string d7 = "oracle energy agreement:", d8 = "collision safety:";
  for (double alpha : {0.01, 0.5, 0.99}) {
    const SolveResult& res = sh.solve50(alpha);
    if (!res.converged) {
      ok7 = ok8 = false;
      d7 += fmt(" a=%.2f not converged;", alpha);
      d8 += fmt(" a=%.2f not converged;", alpha);
      continue;
    }
    const OcpSpec spec = make_ocp(sh.config, alpha);
    const double tf = res.solution.states.back()[sx::t];
    const ValidationReport rep = validate(res.solution, spec, tf / 20000.0);
    ok7 = ok7 && rep.energy_discrepancy <= 0.02;
    ok8 = ok8 && rep.max_corridor_violation <= 1e-3;
    d7 += fmt(" a=%.2f disc %.2e;", alpha, rep.energy_discrepancy);
    d8 += fmt(" a=%.2f pen %.2e m;", alpha, rep.max_corridor_violation);
  }
  report(7, ok7, d7 + " (tol 2%)");
  report(8, ok8, d8 + " (tol 1e-3 m)");
}

// ---------------------------------------------------------------- 9 ----

SweepResult criterion_9_pareto(Shared& sh) {
  const std::vector<double> alphas = alpha_grid(0.01, 0.99, 25);
  SweepResult sweep = run_sweep(sh.config, alphas, true);

  std::vector<const ParetoPoint*> conv;
  for (const auto& pt : sweep.points)
    if (pt.status == "converged") conv.push_back(&pt);

  bool a = conv.size() >= 4;
  for (const auto* p : conv)
    for (const auto* q : conv)
      if (p != q && q->tf <= p->tf + 1e-9 && q->energy <= p->energy + 1e-9 &&
          (q->tf < p->tf - 1e-6 || q->energy < p->energy - 1e-6))
        a = false;

  bool b = false;
  double slope_lo = 0.0, slope_hi = 0.0;
  if (conv.size() >= 4) {
    const auto slope = [](const ParetoPoint* u, const ParetoPoint* v) {
      const double dt = std::abs(u->tf - v->tf);
      return dt > 1e-12 ? std::abs(u->energy - v->energy) / dt : 1e12;
    };
    slope_lo = slope(conv[0], conv[1]);                            // alpha-min end
    slope_hi = slope(conv[conv.size() - 2], conv[conv.size() - 1]);  // alpha-max end
    b = slope_hi >= 5.0 * slope_lo;
  }

  bool c = false;
  if (!conv.empty()) {
    const ParetoPoint* fast = conv.back();  // largest alpha converged
    for (const auto* p : conv)
      if (p->energy <= 0.85 * fast->energy && p->tf <= 1.10 * fast->tf) c = true;
  }

  bool d = !conv.empty();
  for (const auto* p : conv) d = d && p->energy > 0.0;

  int converged_count = 0, dominated = 0;
  for (const auto& pt : sweep.points) {
    if (pt.status == "converged") ++converged_count;
    if (pt.status == "converged_dominated") ++dominated;
  }
  report(9, a && b && c && d,
         fmt("pareto sweep: %d/%d converged (%d flagged dominated); frontier %s; "
             "end slopes %.3f vs %.3f W*s/m %s; knee point %s; min energy positive %s",
             converged_count, static_cast<int>(sweep.points.size()), dominated,
             a ? "nondominated" : "VIOLATED", slope_lo, slope_hi, b ? "ok" : "VIOLATED",
             c ? "found" : "MISSING", d ? "yes" : "NO"));
  return sweep;
}

// --------------------------------------------------------------- 10 ----

void criterion_10_signatures(Shared& sh) {
  const SolveResult& slow = sh.solve50(0.01);
  const SolveResult& fast = sh.solve50(0.99);
  if (!slow.converged || !fast.converged) {
    report(10, false, "trajectory signatures: prerequisite solves not converged");
    return;
  }
  const auto analyze = [&](const SolveResult& res) {
    const PiecewiseControl pc = reconstruct_controls(res.solution);
    const TimeState x0 = time_state_from_spatial(res.solution.states.front(),
                                                 res.solution.grid.xp0);
    const double tf = res.solution.states.back()[sx::t];
    const TimeTrajectory traj = integrate([&pc](double t) { return pc.at(t); }, x0,
                                          sh.config.params, tf, tf / 20000.0);
    double ldot_max = 0.0, power_peak = 0.0;
    for (size_t i = 0; i < traj.t.size(); ++i) {
      ldot_max = std::max(ldot_max, std::abs(traj.states[i].l_dot));
      power_peak = std::max(power_peak, traj.powers[i].p_t + traj.powers[i].p_h);
    }
    const double h = tf / (traj.t.size() - 1.0);
    double dwell = 0.0;
    for (size_t i = 0; i < traj.t.size(); ++i)
      if (std::abs(traj.states[i].l_dot) <= 0.05 * std::max(ldot_max, 1e-9)) dwell += h;
    return std::pair<double, double>(dwell, power_peak);
  };
  const auto [dwell_slow, peak_slow] = analyze(slow);
  const auto [dwell_fast, peak_fast] = analyze(fast);
  const bool pass = dwell_slow > dwell_fast && peak_fast > peak_slow;
  report(10, pass,
         fmt("trajectory signatures: constant-height dwell %.2f s (a=0.01) vs %.2f s "
             "(a=0.99); peak power %.3f W vs %.3f W",
             dwell_slow, dwell_fast, peak_slow, peak_fast));
}

// --------------------------------------------------------------- 11 ----

void criterion_11_refinement(Shared& sh) {
  const auto solve_k = [&](int k) {
    RunConfig cfg = sh.config;
    cfg.grid.k = k;
    if (k == 50) return sh.solve50(0.5);
    return solve_ocp(make_ocp(cfg, 0.5), cfg.solver);
  };
  const SolveResult r25 = solve_k(25);
  const SolveResult r50 = solve_k(50);
  const SolveResult r100 = solve_k(100);
  if (!(r25.converged && r50.converged && r100.converged)) {
    report(11, false,
           fmt("grid refinement: statuses %s / %s / %s", r25.solution.status.c_str(),
               r50.solution.status.c_str(), r100.solution.status.c_str()));
    return;
  }
  const double c_coarse = std::abs(r50.solution.objective - r25.solution.objective);
  const double c_fine = std::abs(r100.solution.objective - r50.solution.objective);
  report(11, c_fine <= c_coarse,
         fmt("grid refinement: |J100-J50| = %.3e <= |J50-J25| = %.3e (J = %.5f / %.5f / "
             "%.5f)",
             c_fine, c_coarse, r25.solution.objective, r50.solution.objective,
             r100.solution.objective));
}

}  // namespace

int main() {
  Shared sh;
  try {
    sh.config = load_config(kDataDir / "example_config.json");
  } catch (const std::exception& e) {
    std::printf("FATAL: cannot load bundled config: %s\n", e.what());
    return 1;
  }

  const auto guarded = [](int id, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  };

  guarded(1, [&] { criterion_1_conservation(); });
  guarded(2, [&] { criterion_2_equivalence(); });
  guarded(3, [&] { criterion_3_derivatives(sh); });
  guarded(4, [&] { criterion_4_solver_battery(); });
  guarded(5, [&] { criterion_5_end_to_end(sh); });
  guarded(6, [&] { criterion_6_tightness(sh); });
  guarded(78, [&] { criteria_7_8_oracle(sh); });
  guarded(9, [&] { criterion_9_pareto(sh); });
  guarded(10, [&] { criterion_10_signatures(sh); });
  guarded(11, [&] { criterion_11_refinement(sh); });

  std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "ALL PASS" : "FAILURES",
              g_failures);
  return g_failures == 0 ? 0 : 1;
}
