#include "crane/transcribe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "crane/dual.hpp"

namespace crane {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kLocals = 26;  // [X_k | X_{k+1} | u | eta_T | eta_H]

// Second-order forward-mode scalar over the interval's local variables:
// value, gradient, and dense Hessian, all fixed-size. Feeds the exact
// Lagrangian Hessian used by the solver.
struct D2 {
  using Grad = Eigen::Matrix<double, kLocals, 1>;
  using Hess = Eigen::Matrix<double, kLocals, kLocals>;
  double v = 0.0;
  Grad g = Grad::Zero();
  Hess H = Hess::Zero();

  D2() = default;
  D2(double value) : v(value) {}
  static D2 seed(double value, int i) {
    D2 r(value);
    r.g(i) = 1.0;
    return r;
  }

  friend D2 operator-(const D2& a) {
    D2 r(-a.v);
    r.g = -a.g;
    r.H = -a.H;
    return r;
  }
  friend D2 operator+(const D2& a, const D2& b) {
    D2 r(a.v + b.v);
    r.g = a.g + b.g;
    r.H = a.H + b.H;
    return r;
  }
  friend D2 operator-(const D2& a, const D2& b) {
    D2 r(a.v - b.v);
    r.g = a.g - b.g;
    r.H = a.H - b.H;
    return r;
  }
  friend D2 operator*(const D2& a, const D2& b) {
    D2 r(a.v * b.v);
    r.g = a.v * b.g + b.v * a.g;
    r.H = a.v * b.H + b.v * a.H + a.g * b.g.transpose() + b.g * a.g.transpose();
    return r;
  }
  friend D2 operator/(const D2& a, const D2& b) {
    const double inv = 1.0 / b.v;
    D2 ib(inv);
    ib.g = -inv * inv * b.g;
    ib.H = -inv * inv * b.H + 2.0 * inv * inv * inv * b.g * b.g.transpose();
    return a * ib;
  }
  friend D2 sin(const D2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    D2 r(s);
    r.g = c * a.g;
    r.H = c * a.H - s * a.g * a.g.transpose();
    return r;
  }
  friend D2 cos(const D2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    D2 r(c);
    r.g = -s * a.g;
    r.H = -s * a.H - c * a.g * a.g.transpose();
    return r;
  }
};

double value_of(const D2& x) { return x.v; }

// Collocation and epigraph residuals of one interval in terms of its
// local variables. Shared between the value path (T = double) and the
// derivative path (T = Dual).
template <class T>
void interval_residuals(const CraneParams& params, double x_left, double dx,
                        const std::array<T, kLocals>& v, std::array<T, 10>& colloc,
                        std::array<T, 12>& epi) {
  SpatialVec<T> left, right, mid, deriv;
  for (int j = 0; j < kNumSpatialStates; ++j) {
    left[j] = v[j];
    right[j] = v[kNumSpatialStates + j];
    mid[j] = 0.5 * (left[j] + right[j]);
    deriv[j] = (right[j] - left[j]) / dx;
  }
  ControlT<T> u{v[20], v[21]};
  const T& eta_t1 = v[22];
  const T& eta_t0 = v[23];
  const T& eta_h1 = v[24];
  const T& eta_h0 = v[25];

  const double x_mid = x_left + 0.5 * dx;
  const double x_right = x_left + dx;

  const T z_t_mid = aux_value(eta_t1, eta_t0, x_mid);
  const T z_h_mid = aux_value(eta_h1, eta_h0, x_mid);
  colloc = implicit_residual(mid, deriv, u, z_t_mid, z_h_mid, params);

  const std::array<T, 4> e_left = epigraph_constraints(
      left, u, aux_value(eta_t1, eta_t0, x_left), aux_value(eta_h1, eta_h0, x_left), params);
  const std::array<T, 4> e_mid = epigraph_constraints(mid, u, z_t_mid, z_h_mid, params);
  const std::array<T, 4> e_right = epigraph_constraints(
      right, u, aux_value(eta_t1, eta_t0, x_right), aux_value(eta_h1, eta_h0, x_right), params);
  for (int j = 0; j < 4; ++j) {
    epi[j] = e_left[j];
    epi[4 + j] = e_mid[j];
    epi[8 + j] = e_right[j];
  }
}

std::vector<int> local_indices(const VariableLayout& layout, int interval) {
  std::vector<int> idx(kLocals);
  for (int j = 0; j < kNumSpatialStates; ++j) {
    idx[j] = layout.state(interval, j);
    idx[kNumSpatialStates + j] = layout.state(interval + 1, j);
  }
  idx[20] = layout.control(interval, 0);
  idx[21] = layout.control(interval, 1);
  idx[22] = layout.eta_t(interval, 0);
  idx[23] = layout.eta_t(interval, 1);
  idx[24] = layout.eta_h(interval, 0);
  idx[25] = layout.eta_h(interval, 1);
  return idx;
}

struct BoundaryRow {
  int var = 0;
  double value = 0.0;
};

std::vector<BoundaryRow> boundary_rows(const OcpSpec& spec) {
  const VariableLayout layout{spec.grid.k};
  std::vector<BoundaryRow> rows;
  for (int j = 0; j < kNumSpatialStates; ++j) {
    if (spec.boundary.initial[j]) rows.push_back({layout.state(0, j), *spec.boundary.initial[j]});
  }
  for (int j = 0; j < kNumSpatialStates; ++j) {
    if (spec.boundary.final[j])
      rows.push_back({layout.state(spec.grid.k, j), *spec.boundary.final[j]});
  }
  return rows;
}

}  // namespace

std::vector<FixedVariable> boundary_pins(const OcpSpec& spec) {
  std::vector<FixedVariable> pins;
  for (const auto& row : boundary_rows(spec)) pins.push_back({row.var, row.value});
  return pins;
}

void OcpSpec::validate() const {
  params.validate();
  grid.validate();
  profile.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::domain_error("OcpSpec: alpha outside [0,1]");
  if (input_bounds.ft_min > input_bounds.ft_max || input_bounds.fh_min > input_bounds.fh_max)
    throw std::domain_error("OcpSpec: inconsistent input bounds");
  if (!(state_bounds.l_min > 0.0) || state_bounds.l_min > state_bounds.l_max)
    throw std::domain_error("OcpSpec: inconsistent rope-length bounds");
  if (!(state_bounds.theta_max > 0.0))
    throw std::domain_error("OcpSpec: theta_max must be positive");
}

NlpProblem transcribe(const OcpSpec& spec_in) {
  const OcpSpec spec = spec_in;  // captured by value below
  spec.validate();
  const int k = spec.grid.k;
  const VariableLayout layout{k};
  const CorridorBounds corridor = corridor_bounds(spec.profile, spec.grid);
  const std::vector<BoundaryRow> bc = boundary_rows(spec);

  NlpProblem p;
  p.num_vars = layout.num_vars();
  p.num_eq = 10 * k + static_cast<int>(bc.size());
  p.num_ineq = 12 * k;

  // Variable bounds; components pinned by a boundary equality get their
  // bounds cleared so the barrier has an interior there.
  p.lb = Eigen::VectorXd::Constant(p.num_vars, -kInf);
  p.ub = Eigen::VectorXd::Constant(p.num_vars, kInf);
  for (int i = 0; i <= k; ++i) {
    p.lb(layout.state(i, sx::t)) = 0.0;
    p.lb(layout.state(i, sx::x_p_dot)) =
        (i == 0 || i == k) ? 0.0 : spec.state_bounds.interior_vx_min;
    p.lb(layout.state(i, sx::y_p)) = corridor.lower[i];
    p.ub(layout.state(i, sx::y_p)) = corridor.upper[i];
    p.lb(layout.state(i, sx::l)) = spec.state_bounds.l_min;
    p.ub(layout.state(i, sx::l)) = spec.state_bounds.l_max;
    p.lb(layout.state(i, sx::theta)) = -spec.state_bounds.theta_max;
    p.ub(layout.state(i, sx::theta)) = spec.state_bounds.theta_max;
  }
  for (int i = 0; i < k; ++i) {
    p.lb(layout.control(i, 0)) = spec.input_bounds.ft_min;
    p.ub(layout.control(i, 0)) = spec.input_bounds.ft_max;
    p.lb(layout.control(i, 1)) = spec.input_bounds.fh_min;
    p.ub(layout.control(i, 1)) = spec.input_bounds.fh_max;
  }
  for (const auto& row : bc) {
    p.lb(row.var) = -kInf;
    p.ub(row.var) = kInf;
  }

  const double alpha = spec.alpha;
  const int n_vars = p.num_vars;
  const int final_t = layout.state(k, sx::t);
  const int final_et = layout.state(k, sx::e_t);
  const int final_eh = layout.state(k, sx::e_h);

  p.objective = [alpha, final_t, final_et, final_eh](const Eigen::VectorXd& w) {
    return alpha * w(final_t) + (1.0 - alpha) * (w(final_et) + w(final_eh));
  };
  p.gradient = [alpha, n_vars, final_t, final_et, final_eh](const Eigen::VectorXd& w) {
    (void)w;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_vars);
    g(final_t) = alpha;
    g(final_et) = 1.0 - alpha;
    g(final_eh) = 1.0 - alpha;
    return g;
  };

  const int num_eq = p.num_eq;
  const int num_ineq = p.num_ineq;
  p.constraints = [spec, layout, bc, num_eq, num_ineq](const Eigen::VectorXd& w,
                                                       Eigen::VectorXd& c_eq,
                                                       Eigen::VectorXd& c_ineq) {
    const int kk = spec.grid.k;
    const double dx = spec.grid.dx();
    c_eq.resize(num_eq);
    c_ineq.resize(num_ineq);
    std::array<double, kLocals> v;
    std::array<double, 10> colloc;
    std::array<double, 12> epi;
    for (int i = 0; i < kk; ++i) {
      const std::vector<int> idx = local_indices(layout, i);
      for (int j = 0; j < kLocals; ++j) v[j] = w(idx[j]);
      interval_residuals(spec.params, spec.grid.point(i), dx, v, colloc, epi);
      for (int j = 0; j < 10; ++j) c_eq(10 * i + j) = colloc[j];
      for (int j = 0; j < 12; ++j) c_ineq(12 * i + j) = epi[j];
    }
    for (size_t r = 0; r < bc.size(); ++r)
      c_eq(10 * kk + static_cast<int>(r)) = w(bc[r].var) - bc[r].value;
  };

  p.jacobians = [spec, layout, bc, num_eq, num_ineq](const Eigen::VectorXd& w,
                                                     Eigen::SparseMatrix<double>& j_eq,
                                                     Eigen::SparseMatrix<double>& j_ineq) {
    const int kk = spec.grid.k;
    const double dx = spec.grid.dx();
    const int nv = layout.num_vars();
    std::vector<Eigen::Triplet<double>> te, ti;
    te.reserve(10 * kLocals * kk + bc.size());
    ti.reserve(12 * kLocals * kk);
    std::array<Dual, kLocals> v;
    std::array<Dual, 10> colloc;
    std::array<Dual, 12> epi;
    for (int i = 0; i < kk; ++i) {
      const std::vector<int> idx = local_indices(layout, i);
      for (int j = 0; j < kLocals; ++j) v[j] = Dual(w(idx[j]), kLocals, j);
      interval_residuals(spec.params, spec.grid.point(i), dx, v, colloc, epi);
      for (int j = 0; j < 10; ++j) {
        if (colloc[j].constant()) continue;
        for (int c = 0; c < kLocals; ++c)
          te.emplace_back(10 * i + j, idx[c], colloc[j].d(c));
      }
      for (int j = 0; j < 12; ++j) {
        if (epi[j].constant()) continue;
        for (int c = 0; c < kLocals; ++c)
          ti.emplace_back(12 * i + j, idx[c], epi[j].d(c));
      }
    }
    for (size_t r = 0; r < bc.size(); ++r)
      te.emplace_back(10 * kk + static_cast<int>(r), bc[r].var, 1.0);
    j_eq.resize(num_eq, nv);
    j_ineq.resize(num_ineq, nv);
    j_eq.setFromTriplets(te.begin(), te.end());
    j_ineq.setFromTriplets(ti.begin(), ti.end());
  };

  // Exact Lagrangian Hessian. The objective and the boundary rows are
  // linear, so only the per-interval residual curvature contributes.
  p.lagrangian_hessian = [spec, layout](const Eigen::VectorXd& w, const Eigen::VectorXd& y_eq,
                                        const Eigen::VectorXd& y_in, double curvature_floor) {
    const int kk = spec.grid.k;
    const double dx = spec.grid.dx();
    const int nv = layout.num_vars();
    std::vector<Eigen::Triplet<double>> th;
    th.reserve(kLocals * kLocals * kk);
    std::array<D2, kLocals> v;
    std::array<D2, 10> colloc;
    std::array<D2, 12> epi;
    for (int i = 0; i < kk; ++i) {
      const std::vector<int> idx = local_indices(layout, i);
      for (int j = 0; j < kLocals; ++j) v[j] = D2::seed(w(idx[j]), j);
      interval_residuals(spec.params, spec.grid.point(i), dx, v, colloc, epi);
      D2::Hess local = D2::Hess::Zero();
      for (int j = 0; j < 10; ++j) local -= y_eq(10 * i + j) * colloc[j].H;
      for (int j = 0; j < 12; ++j) local -= y_in(12 * i + j) * epi[j].H;
      local = 0.5 * (local + local.transpose()).eval();
      if (curvature_floor > 0.0) {
        // Convexify block-wise: clip eigenvalues from below so the condensed
        // Newton system stays factorizable without inertia-destroying global
        // regularization. Positive curvature is kept exact.
        Eigen::SelfAdjointEigenSolver<D2::Hess> eig(local);
        local = eig.eigenvectors() *
                eig.eigenvalues().cwiseMax(curvature_floor).asDiagonal() *
                eig.eigenvectors().transpose();
      }
      for (int r = 0; r < kLocals; ++r)
        for (int c = 0; c < kLocals; ++c)
          if (local(r, c) != 0.0) th.emplace_back(idx[r], idx[c], local(r, c));
    }
    Eigen::SparseMatrix<double> h(nv, nv);
    h.setFromTriplets(th.begin(), th.end());
    return h;
  };

  for (int i = 0; i < k; ++i) {
    const std::vector<int> idx = local_indices(layout, i);
    for (int j = 0; j < 10; ++j)
      for (int c = 0; c < kLocals; ++c) p.eq_pattern.emplace_back(10 * i + j, idx[c]);
    for (int j = 0; j < 12; ++j)
      for (int c = 0; c < kLocals; ++c) p.ineq_pattern.emplace_back(12 * i + j, idx[c]);
  }
  for (size_t r = 0; r < bc.size(); ++r)
    p.eq_pattern.emplace_back(10 * k + static_cast<int>(r), bc[r].var);

  return p;
}

Eigen::VectorXd initial_guess(const OcpSpec& spec) {
  spec.validate();
  const int k = spec.grid.k;
  const VariableLayout layout{k};
  const CorridorBounds corridor = corridor_bounds(spec.profile, spec.grid);

  const auto boundary_pair = [&](int j, double fallback) {
    const double a = spec.boundary.initial[j].value_or(fallback);
    const double b = spec.boundary.final[j].value_or(a);
    return std::pair<double, double>(a, b);
  };

  const double distance = spec.grid.xpf - spec.grid.xp0;
  const double v_guess = std::max(0.1, distance / 2.5);
  const auto [y0, yf] = boundary_pair(sx::y_p, 0.5 * (corridor.lower[0] + corridor.upper[0]));
  const auto [l0, lf] = boundary_pair(sx::l, y0);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(layout.num_vars());
  for (int i = 0; i <= k; ++i) {
    const double tau = static_cast<double>(i) / k;
    w(layout.state(i, sx::t)) = tau * distance / v_guess;
    w(layout.state(i, sx::x_p_dot)) = v_guess;
    const double midline = 0.5 * (corridor.lower[i] + corridor.upper[i]);
    const double y = std::min(y0 + tau * (yf - y0), midline);
    w(layout.state(i, sx::y_p)) = y;
    w(layout.state(i, sx::l)) =
        std::clamp(l0 + tau * (lf - l0), spec.state_bounds.l_min, spec.state_bounds.l_max);
  }
  const double hover = spec.params.m2 * spec.params.g;
  for (int i = 0; i < k; ++i) {
    w(layout.control(i, 0)) = 0.0;
    w(layout.control(i, 1)) = hover;
    // Hover power is zero for both subsystems at the guess (no trolley
    // force, no hoisting), so the aux functions start at zero.
  }
  return w;
}

Derivatives evaluate_derivatives(const NlpProblem& problem, const Eigen::VectorXd& w) {
  if (!w.allFinite()) {
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (!std::isfinite(w(i)))
        throw std::runtime_error("evaluate_derivatives: non-finite w at index " +
                                 std::to_string(i));
  }
  Derivatives d;
  d.gradient = problem.gradient(w);
  problem.jacobians(w, d.jac_eq, d.jac_ineq);
  for (Eigen::Index i = 0; i < d.gradient.size(); ++i)
    if (!std::isfinite(d.gradient(i)))
      throw std::runtime_error("evaluate_derivatives: non-finite gradient entry " +
                               std::to_string(i));
  for (int outer = 0; outer < d.jac_eq.outerSize(); ++outer)
    for (Eigen::SparseMatrix<double>::InnerIterator it(d.jac_eq, outer); it; ++it)
      if (!std::isfinite(it.value()))
        throw std::runtime_error("evaluate_derivatives: non-finite equality Jacobian entry (" +
                                 std::to_string(it.row()) + "," + std::to_string(it.col()) + ")");
  for (int outer = 0; outer < d.jac_ineq.outerSize(); ++outer)
    for (Eigen::SparseMatrix<double>::InnerIterator it(d.jac_ineq, outer); it; ++it)
      if (!std::isfinite(it.value()))
        throw std::runtime_error("evaluate_derivatives: non-finite inequality Jacobian entry (" +
                                 std::to_string(it.row()) + "," + std::to_string(it.col()) + ")");
  return d;
}

DiscretizedSolution unpack_solution(const OcpSpec& spec, const SolveOutcome& outcome) {
  const int k = spec.grid.k;
  const VariableLayout layout{k};
  if (outcome.w.size() != layout.num_vars())
    throw std::invalid_argument("unpack_solution: dimension mismatch");
  DiscretizedSolution sol;
  sol.grid = spec.grid;
  sol.alpha = spec.alpha;
  sol.status = to_string(outcome.status);
  sol.iterations = outcome.iterations;
  sol.states.resize(k + 1);
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j < kNumSpatialStates; ++j) sol.states[i][j] = outcome.w(layout.state(i, j));
  sol.controls.resize(k);
  sol.eta_t.resize(k);
  sol.eta_h.resize(k);
  for (int i = 0; i < k; ++i) {
    sol.controls[i] = {outcome.w(layout.control(i, 0)), outcome.w(layout.control(i, 1))};
    sol.eta_t[i] = {outcome.w(layout.eta_t(i, 0)), outcome.w(layout.eta_t(i, 1))};
    sol.eta_h[i] = {outcome.w(layout.eta_h(i, 0)), outcome.w(layout.eta_h(i, 1))};
  }
  sol.objective = mayer_objective(sol.states.back(), spec.alpha);
  return sol;
}

Eigen::VectorXd pack_solution(const DiscretizedSolution& sol) {
  const int k = sol.grid.k;
  const VariableLayout layout{k};
  Eigen::VectorXd w(layout.num_vars());
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j < kNumSpatialStates; ++j) w(layout.state(i, j)) = sol.states[i][j];
  for (int i = 0; i < k; ++i) {
    w(layout.control(i, 0)) = sol.controls[i].f_t;
    w(layout.control(i, 1)) = sol.controls[i].f_h;
    w(layout.eta_t(i, 0)) = sol.eta_t[i].eta1;
    w(layout.eta_t(i, 1)) = sol.eta_t[i].eta0;
    w(layout.eta_h(i, 0)) = sol.eta_h[i].eta1;
    w(layout.eta_h(i, 1)) = sol.eta_h[i].eta0;
  }
  return w;
}

namespace {

// Regenerated flows max(P, gamma*P) at a grid state under interval control.
std::pair<double, double> point_flows(const SpatialState& s, const Control& u,
                                      const CraneParams& params) {
  const PowerPair pw = actuator_power(time_state_from_spatial(s, 0.0), u);
  return {regen_power_flow(pw.p_t, params.gamma_t), regen_power_flow(pw.p_h, params.gamma_h)};
}

void tighten_one(AuxCoeffs& eta, double x_mid, double dx, double m_left, double m_right) {
  const double z_mid = aux_value(eta, x_mid);
  // Feasible slope range keeping both endpoint residuals nonnegative.
  const double s_min = 2.0 * (m_right - z_mid) / dx;
  const double s_max = 2.0 * (z_mid - m_left) / dx;
  if (s_min > s_max) return;  // midpoint below the endpoint average; keep as solved
  const double s = std::clamp((m_right - m_left) / dx, s_min, s_max);
  eta.eta1 = s;
  eta.eta0 = z_mid - s * x_mid;
}

}  // namespace

void tighten_aux(DiscretizedSolution& sol, const CraneParams& params) {
  const double dx = sol.grid.dx();
  for (int i = 0; i < sol.grid.k; ++i) {
    SpatialState mid;
    for (int j = 0; j < kNumSpatialStates; ++j)
      mid[j] = 0.5 * (sol.states[i][j] + sol.states[i + 1][j]);
    const double x_mid = sol.grid.point(i) + 0.5 * dx;
    const auto [tl, hl] = point_flows(sol.states[i], sol.controls[i], params);
    const auto [tr, hr] = point_flows(sol.states[i + 1], sol.controls[i], params);
    tighten_one(sol.eta_t[i], x_mid, dx, tl, tr);
    tighten_one(sol.eta_h[i], x_mid, dx, hl, hr);
  }
}

TightnessReport tightness_report(const DiscretizedSolution& sol, const CraneParams& params) {
  TightnessReport rep;
  const int k = sol.grid.k;
  for (int i = 0; i < k; ++i) {
    const double x_left = sol.grid.point(i);
    const std::array<std::pair<double, SpatialState>, 3> points = [&] {
      SpatialState mid;
      for (int j = 0; j < kNumSpatialStates; ++j)
        mid[j] = 0.5 * (sol.states[i][j] + sol.states[i + 1][j]);
      return std::array<std::pair<double, SpatialState>, 3>{
          std::pair{x_left, sol.states[i]},
          std::pair{x_left + 0.5 * sol.grid.dx(), mid},
          std::pair{x_left + sol.grid.dx(), sol.states[i + 1]}};
    }();
    for (const auto& [xp, state] : points) {
      const double z_t = aux_value(sol.eta_t[i], xp);
      const double z_h = aux_value(sol.eta_h[i], xp);
      const auto res = epigraph_constraints(state, sol.controls[i], z_t, z_h, params);
      rep.trolley_gaps.push_back(std::min(res[0], res[1]));
      rep.hoist_gaps.push_back(std::min(res[2], res[3]));
    }
  }
  rep.max_gap = 0.0;
  for (double g : rep.trolley_gaps) rep.max_gap = std::max(rep.max_gap, std::abs(g));
  for (double g : rep.hoist_gaps) rep.max_gap = std::max(rep.max_gap, std::abs(g));
  return rep;
}

}  // namespace crane
