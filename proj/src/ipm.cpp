#include "crane/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <deque>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace crane {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

struct Workspace {
  const NlpProblem& p;
  double f = 0.0;
  Eigen::VectorXd grad, c_eq, c_ineq;
  Eigen::SparseMatrix<double> j_eq, j_ineq;

  explicit Workspace(const NlpProblem& prob) : p(prob) {}

  void eval(const Eigen::VectorXd& w) {
    f = p.objective(w);
    grad = p.gradient(w);
    p.constraints(w, c_eq, c_ineq);
    p.jacobians(w, j_eq, j_ineq);
    if (!std::isfinite(f) || !finite(grad) || !finite(c_eq) || !finite(c_ineq))
      throw std::runtime_error("ipm: non-finite problem evaluation");
  }
};

// Fraction-to-boundary: largest alpha in (0, 1] with v + alpha*dv >= (1-tau)*v.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, double tau) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -tau * v(i) / dv(i));
  }
  return alpha;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(kkt_tolerance > 0.0) || !(mu_init > 0.0) || !(mu_reduction > 0.0) ||
      !(regularization_floor > 0.0) || max_iterations <= 0)
    throw std::domain_error("SolverOptions: parameters must be positive");
  if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("SolverOptions: tau outside (0,1)");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::stalled: return "stalled";
    case SolveStatus::infeasible_detected: return "infeasible_detected";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max(std::max(stationarity, primal_eq), std::max(primal_ineq, complementarity));
}

KktResiduals kkt_residuals(const NlpProblem& problem, const Eigen::VectorXd& w,
                           const Multipliers& m) {
  if (w.size() != problem.num_vars) throw std::invalid_argument("kkt_residuals: bad w size");
  Workspace ws(problem);
  ws.eval(w);
  Eigen::VectorXd r = ws.grad;
  if (problem.num_eq > 0) r -= ws.j_eq.transpose() * m.eq;
  if (problem.num_ineq > 0) r -= ws.j_ineq.transpose() * m.ineq;
  if (m.z_lower.size() == w.size()) r -= m.z_lower;
  if (m.z_upper.size() == w.size()) r += m.z_upper;

  KktResiduals res;
  res.stationarity = inf_norm(r);
  res.primal_eq = inf_norm(ws.c_eq);
  double viol = 0.0;
  for (Eigen::Index i = 0; i < ws.c_ineq.size(); ++i) viol = std::max(viol, -ws.c_ineq(i));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (problem.lb(i) > -kInf) viol = std::max(viol, problem.lb(i) - w(i));
    if (problem.ub(i) < kInf) viol = std::max(viol, w(i) - problem.ub(i));
  }
  res.primal_ineq = viol;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < ws.c_ineq.size(); ++i)
    comp = std::max(comp, std::abs(ws.c_ineq(i) * m.ineq(i)));
  if (m.z_lower.size() == w.size()) {
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (problem.lb(i) > -kInf)
        comp = std::max(comp, std::abs((w(i) - problem.lb(i)) * m.z_lower(i)));
  }
  if (m.z_upper.size() == w.size()) {
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (problem.ub(i) < kInf)
        comp = std::max(comp, std::abs((problem.ub(i) - w(i)) * m.z_upper(i)));
  }
  res.complementarity = comp;
  return res;
}

SolveOutcome solve(const NlpProblem& problem, const Eigen::VectorXd& w0,
                   const SolverOptions& opts) {
  opts.validate();
  const int n = problem.num_vars;
  const int me = problem.num_eq;
  const int mi = problem.num_ineq;
  if (w0.size() != n) throw std::invalid_argument("ipm: w0 dimension mismatch");
  if (problem.lb.size() != n || problem.ub.size() != n)
    throw std::invalid_argument("ipm: bound vector dimension mismatch");
  for (int i = 0; i < n; ++i)
    if (problem.lb(i) >= problem.ub(i))
      throw std::invalid_argument("ipm: lb >= ub (fix the variable via an equality instead)");
  if (!finite(w0)) throw std::invalid_argument("ipm: w0 not finite");

  SolveOutcome out;
  const double tol = opts.kkt_tolerance;
  const double mu_min = tol / 10.0;
  double mu = opts.mu_init;

  // Push the start point strictly inside its bounds.
  Eigen::VectorXd w = w0;
  for (int i = 0; i < n; ++i) {
    const double lo = problem.lb(i), hi = problem.ub(i);
    if (lo > -kInf && hi < kInf) {
      const double pad = std::min(1e-2 * std::max(1.0, std::abs(lo)), 0.25 * (hi - lo));
      w(i) = std::clamp(w(i), lo + pad, hi - pad);
    } else if (lo > -kInf) {
      w(i) = std::max(w(i), lo + 1e-2 * std::max(1.0, std::abs(lo)));
    } else if (hi < kInf) {
      w(i) = std::min(w(i), hi - 1e-2 * std::max(1.0, std::abs(hi)));
    }
  }

  Workspace ws(problem);
  ws.eval(w);

  Eigen::VectorXd s(mi);
  for (int i = 0; i < mi; ++i) s(i) = std::max(ws.c_ineq(i), 1e-2);
  Eigen::VectorXd y_eq = Eigen::VectorXd::Zero(me);
  Eigen::VectorXd y_in(mi);
  for (int i = 0; i < mi; ++i) y_in(i) = mu / s(i);
  Eigen::VectorXd z_lo = Eigen::VectorXd::Zero(n), z_up = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (problem.lb(i) > -kInf) z_lo(i) = mu / (w(i) - problem.lb(i));
    if (problem.ub(i) < kInf) z_up(i) = mu / (problem.ub(i) - w(i));
  }

  const bool exact_hessian = static_cast<bool>(problem.lagrangian_hessian);
  Eigen::MatrixXd bfgs =
      exact_hessian ? Eigen::MatrixXd() : Eigen::MatrixXd::Identity(n, n);
  bool bfgs_scaled = false;
  double nu = 1.0;           // merit penalty weight
  int bad_steps = 0;
  int stall_count = 0;          // consecutive vanishing step lengths
  std::deque<std::pair<double, double>> phi_hist;  // (barrier, infeasibility)
  bool restarted_at_mu = false; // one dual restart allowed per barrier value

  // Previous-iterate data for the quasi-Newton update.
  Eigen::VectorXd prev_w, prev_grad;
  Eigen::SparseMatrix<double> prev_j_eq, prev_j_ineq;
  bool have_prev = false;

  auto barrier_value = [&](const Eigen::VectorXd& wv, const Eigen::VectorXd& sv,
                           double fv) -> double {
    double phi = fv;
    for (int i = 0; i < mi; ++i) {
      if (sv(i) <= 0.0) return kInf;
      phi -= mu * std::log(sv(i));
    }
    for (int i = 0; i < n; ++i) {
      if (problem.lb(i) > -kInf) {
        const double gap = wv(i) - problem.lb(i);
        if (gap <= 0.0) return kInf;
        phi -= mu * std::log(gap);
      }
      if (problem.ub(i) < kInf) {
        const double gap = problem.ub(i) - wv(i);
        if (gap <= 0.0) return kInf;
        phi -= mu * std::log(gap);
      }
    }
    return phi;
  };

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    // Quasi-Newton update from the previous accepted step, using the
    // current multipliers on both gradient evaluations.
    if (!exact_hessian && have_prev) {
      Eigen::VectorXd sk = w - prev_w;
      Eigen::VectorXd gl_new = ws.grad;
      Eigen::VectorXd gl_old = prev_grad;
      if (me > 0) {
        gl_new -= ws.j_eq.transpose() * y_eq;
        gl_old -= prev_j_eq.transpose() * y_eq;
      }
      if (mi > 0) {
        gl_new -= ws.j_ineq.transpose() * y_in;
        gl_old -= prev_j_ineq.transpose() * y_in;
      }
      Eigen::VectorXd yk = gl_new - gl_old;
      const double ss = sk.squaredNorm();
      if (ss > 1e-16) {
        const double sy = sk.dot(yk);
        if (!bfgs_scaled && sy > 1e-12) {
          bfgs *= yk.squaredNorm() / sy;
          bfgs_scaled = true;
        }
        Eigen::VectorXd bs = bfgs * sk;
        const double sbs = sk.dot(bs);
        if (sbs > 1e-16) {
          // Powell damping keeps the update positive definite.
          Eigen::VectorXd yhat = yk;
          double syhat = sy;
          if (sy < 0.2 * sbs) {
            const double theta = 0.8 * sbs / (sbs - sy);
            yhat = theta * yk + (1.0 - theta) * bs;
            syhat = sk.dot(yhat);
          }
          if (syhat > 1e-14 * ss) {
            bfgs.noalias() -= (bs * bs.transpose()) / sbs;
            bfgs.noalias() += (yhat * yhat.transpose()) / syhat;
          }
        }
      }
    }
    prev_w = w;
    prev_grad = ws.grad;
    prev_j_eq = ws.j_eq;
    prev_j_ineq = ws.j_ineq;
    have_prev = true;

    // Poor equality multipliers poison both the Hessian and the Newton
    // right-hand side. Re-estimate them by least squares from the
    // stationarity condition and keep whichever gives the smaller dual
    // residual.
    if (me > 0) {
      Eigen::VectorXd g0 = ws.grad - z_lo + z_up;
      if (mi > 0) g0 -= ws.j_ineq.transpose() * y_in;
      Eigen::MatrixXd je = Eigen::MatrixXd(ws.j_eq);
      Eigen::MatrixXd nrm = je * je.transpose();
      nrm.diagonal().array() += 1e-8;
      const Eigen::VectorXd y_ls = nrm.llt().solve(je * g0);
      const double res_cur = inf_norm(g0 - ws.j_eq.transpose() * y_eq);
      const double res_ls = inf_norm(g0 - ws.j_eq.transpose() * y_ls);
      if (res_ls < 0.5 * res_cur) y_eq = y_ls;
    }

    // A run of vanishing step lengths means the search directions have been
    // poisoned by off-central multipliers while the primal iterate is fine.
    // Restart the duals on the central path at the current point (once per
    // barrier value) instead of grinding to a halt.
    if (stall_count >= 5 && !restarted_at_mu) {
      restarted_at_mu = true;
      phi_hist.clear();
      stall_count = 0;
      for (int i = 0; i < mi; ++i) {
        if (ws.c_ineq(i) > 1e-8) s(i) = ws.c_ineq(i);
        s(i) = std::max(s(i), 1e-8);
        y_in(i) = mu / s(i);
      }
      for (int i = 0; i < n; ++i) {
        if (problem.lb(i) > -kInf) z_lo(i) = mu / (w(i) - problem.lb(i));
        if (problem.ub(i) < kInf) z_up(i) = mu / (problem.ub(i) - w(i));
      }
      if (me > 0) {
        Eigen::VectorXd g0 = ws.grad - z_lo + z_up;
        if (mi > 0) g0 -= ws.j_ineq.transpose() * y_in;
        Eigen::MatrixXd je = Eigen::MatrixXd(ws.j_eq);
        Eigen::MatrixXd nrm = je * je.transpose();
        nrm.diagonal().array() += 1e-8;
        y_eq = nrm.llt().solve(je * g0);
      }
      nu = 1.0;
      bad_steps = 0;
    }

    // KKT residuals at the current point.
    Eigen::VectorXd r_w = ws.grad;
    if (me > 0) r_w -= ws.j_eq.transpose() * y_eq;
    if (mi > 0) r_w -= ws.j_ineq.transpose() * y_in;
    r_w -= z_lo;
    r_w += z_up;
    Eigen::VectorXd r_in = ws.c_ineq - s;

    double comp0 = 0.0;
    for (int i = 0; i < mi; ++i) comp0 = std::max(comp0, std::abs(s(i) * y_in(i)));
    for (int i = 0; i < n; ++i) {
      if (problem.lb(i) > -kInf)
        comp0 = std::max(comp0, std::abs((w(i) - problem.lb(i)) * z_lo(i)));
      if (problem.ub(i) < kInf)
        comp0 = std::max(comp0, std::abs((problem.ub(i) - w(i)) * z_up(i)));
    }
    double comp_mu = 0.0;
    for (int i = 0; i < mi; ++i) comp_mu = std::max(comp_mu, std::abs(s(i) * y_in(i) - mu));
    for (int i = 0; i < n; ++i) {
      if (problem.lb(i) > -kInf)
        comp_mu = std::max(comp_mu, std::abs((w(i) - problem.lb(i)) * z_lo(i) - mu));
      if (problem.ub(i) < kInf)
        comp_mu = std::max(comp_mu, std::abs((problem.ub(i) - w(i)) * z_up(i) - mu));
    }
    const double primal_inf = std::max(inf_norm(ws.c_eq), inf_norm(r_in));
    const double dual_inf = inf_norm(r_w);
    // Scale the dual-side residuals by the average multiplier magnitude so a
    // problem whose active constraints carry large multipliers is not held to
    // an unattainably tight absolute stationarity target.
    const double s_max = 100.0;
    const double y_sum = y_eq.lpNorm<1>() + y_in.lpNorm<1>() + z_lo.lpNorm<1>() +
                         z_up.lpNorm<1>();
    const double z_sum = y_in.lpNorm<1>() + z_lo.lpNorm<1>() + z_up.lpNorm<1>();
    const double s_d =
        std::max(s_max, y_sum / std::max(1, me + mi + 2 * n)) / s_max;
    const double s_c = std::max(s_max, z_sum / std::max(1, mi + 2 * n)) / s_max;
    const double err0 =
        std::max(std::max(primal_inf, dual_inf / s_d), comp0 / s_c);
    const double err_mu =
        std::max(std::max(primal_inf, dual_inf / s_d), comp_mu / s_c);

    if (err0 <= tol) {
      out.status = SolveStatus::converged;
      break;
    }
    while (mu > mu_min && err_mu <= 10.0 * mu) {
      mu = std::max(mu_min, std::min(opts.mu_reduction * mu, std::pow(mu, 1.5)));
      restarted_at_mu = false;
      phi_hist.clear();  // barrier values at the old mu are not comparable
      // Complementarity targets moved with mu; refresh before retesting.
      comp_mu = 0.0;
      for (int i = 0; i < mi; ++i) comp_mu = std::max(comp_mu, std::abs(s(i) * y_in(i) - mu));
      for (int i = 0; i < n; ++i) {
        if (problem.lb(i) > -kInf)
          comp_mu = std::max(comp_mu, std::abs((w(i) - problem.lb(i)) * z_lo(i) - mu));
        if (problem.ub(i) < kInf)
          comp_mu = std::max(comp_mu, std::abs((problem.ub(i) - w(i)) * z_up(i) - mu));
      }
      if (std::max(std::max(primal_inf, dual_inf / s_d), comp_mu / s_c) >
          10.0 * mu)
        break;
    }

    // Condensed primal-dual system.
    Eigen::VectorXd sigma = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd b_lo = Eigen::VectorXd::Zero(n), b_up = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (problem.lb(i) > -kInf) {
        const double gap = w(i) - problem.lb(i);
        sigma(i) += z_lo(i) / gap;
        b_lo(i) = mu / gap - z_lo(i);
      }
      if (problem.ub(i) < kInf) {
        const double gap = problem.ub(i) - w(i);
        sigma(i) += z_up(i) / gap;
        b_up(i) = mu / gap - z_up(i);
      }
    }
    Eigen::VectorXd d_in(mi), a_in(mi);
    for (int i = 0; i < mi; ++i) {
      d_in(i) = y_in(i) / s(i);
      a_in(i) = mu / s(i) - y_in(i) - d_in(i) * r_in(i);
    }

    // Far from feasibility a convexified curvature model gives reliable
    // descent; once the equalities hold, the exact Hessian (with diagonal
    // regularization on factorization failure) restores fast local
    // convergence that the convexified model cannot deliver.  If the exact
    // Hessian would need excessive regularization — which happens after a
    // multiplier spike poisons the curvature — fall back to the convexified
    // model for that iteration instead of taking a huge-shift step whose
    // Schur complement would blow the equality multipliers up further.
    const auto assemble = [&](double curvature_floor) {
      Eigen::MatrixXd m =
          exact_hessian
              ? Eigen::MatrixXd(
                    problem.lagrangian_hessian(w, y_eq, y_in, curvature_floor))
              : bfgs;
      m.diagonal() += sigma;
      if (mi > 0) {
        Eigen::SparseMatrix<double> jdj =
            ws.j_ineq.transpose() * d_in.asDiagonal() * ws.j_ineq;
        m += Eigen::MatrixXd(jdj);
      }
      return m;
    };
    bool want_exact = exact_hessian && primal_inf <= 1e-3;
    Eigen::MatrixXd h = assemble(want_exact ? 0.0 : 1e-4);

    Eigen::VectorXd rhs1 = -r_w + b_lo - b_up;
    if (mi > 0) rhs1 += ws.j_ineq.transpose() * a_in;

    // Factor with escalating diagonal regularization until positive definite.
    // The shift sequence restarts from a scale-relative seed every iteration;
    // carrying the previous iteration's shift forward lets one bad iteration
    // keep every later step over-regularized.
    Eigen::LLT<Eigen::MatrixXd> llt;
    double delta = 0.0;
    const double h_scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd hreg = h;
      if (delta > 0.0) hreg.diagonal().array() += delta;
      llt.compute(hreg);
      if (llt.info() == Eigen::Success) break;
      if (want_exact && delta >= 1e-4 * h_scale) {
        // Exact curvature is indefinite beyond repair at this point; use the
        // convexified model this iteration and restart the shift sequence.
        want_exact = false;
        h = assemble(1e-4);
        delta = 0.0;
        continue;
      }
      delta = (delta == 0.0) ? std::max(opts.regularization_floor, 1e-8 * h_scale)
                             : delta * 100.0;
      if (delta > 1e12 * h_scale) {
        out.status = SolveStatus::numerical_failure;
        out.iterations = iter;
        out.w = w;
        out.multipliers = {y_eq, y_in, z_lo, z_up};
        out.slacks = s;
        return out;
      }
    }


    Eigen::VectorXd dw, dy_eq = Eigen::VectorXd::Zero(me);
    Eigen::MatrixXd hinv_jet;
    Eigen::LDLT<Eigen::MatrixXd> llt_s;
    if (me > 0) {
      Eigen::MatrixXd je = Eigen::MatrixXd(ws.j_eq);
      hinv_jet = llt.solve(je.transpose());
      Eigen::MatrixXd schur = je * hinv_jet;
      // An ill-conditioned primal block makes the product lose symmetry and
      // definiteness in floating point; restore both before factoring.
      schur = 0.5 * (schur + schur.transpose()).eval();
      // The shift perturbs the linearized equalities by shift*dy, so it must
      // stay small; it is still large enough to suppress the multiplier
      // directions belonging to nearly dependent equality rows, which
      // otherwise produce enormous long flat steps the line search rejects.
      schur.diagonal().array() +=
          1e-9 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
      llt_s.compute(schur);
      if (llt_s.info() != Eigen::Success || !llt_s.isPositive()) {
        out.status = SolveStatus::numerical_failure;
        out.iterations = iter;
        out.w = w;
        out.multipliers = {y_eq, y_in, z_lo, z_up};
        out.slacks = s;
        return out;
      }
      const Eigen::VectorXd rhs_s = -ws.c_eq - je * llt.solve(rhs1);
      dy_eq = llt_s.solve(rhs_s);
      dy_eq += llt_s.solve(rhs_s - schur * dy_eq);
      dw = llt.solve(rhs1 + je.transpose() * dy_eq);
    } else {
      dw = llt.solve(rhs1);
    }

    Eigen::VectorXd ds(mi), dy_in(mi);
    if (mi > 0) {
      Eigen::VectorXd jdw = ws.j_ineq * dw;
      for (int i = 0; i < mi; ++i) {
        ds(i) = jdw(i) + r_in(i);
        dy_in(i) = (mu / s(i) - y_in(i)) - d_in(i) * ds(i);
      }
    }
    Eigen::VectorXd dz_lo = Eigen::VectorXd::Zero(n), dz_up = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (problem.lb(i) > -kInf)
        dz_lo(i) = b_lo(i) - (z_lo(i) / (w(i) - problem.lb(i))) * dw(i);
      if (problem.ub(i) < kInf)
        dz_up(i) = b_up(i) + (z_up(i) / (problem.ub(i) - w(i))) * dw(i);
    }

    // Fraction-to-boundary limits.
    double alpha_p = max_step(s, ds, opts.tau);
    for (int i = 0; i < n; ++i) {
      if (problem.lb(i) > -kInf && dw(i) < 0.0)
        alpha_p = std::min(alpha_p, -opts.tau * (w(i) - problem.lb(i)) / dw(i));
      if (problem.ub(i) < kInf && dw(i) > 0.0)
        alpha_p = std::min(alpha_p, opts.tau * (problem.ub(i) - w(i)) / dw(i));
    }
    double alpha_d = max_step(y_in, dy_in, opts.tau);
    alpha_d = std::min(alpha_d, max_step(z_lo, dz_lo, opts.tau));
    alpha_d = std::min(alpha_d, max_step(z_up, dz_up, opts.tau));

    // l1 merit line search on (w, s). The penalty weight is model-based:
    // just large enough that the direction is descent for the merit, with
    // room to come back down after a transient spike. Tying it to the
    // multiplier iterates instead lets one bad dual step paralyze every
    // subsequent line search.
    const double infeas0 = ws.c_eq.lpNorm<1>() + r_in.lpNorm<1>();
    double dphi_b = ws.grad.dot(dw);
    for (int i = 0; i < mi; ++i) dphi_b -= mu * ds(i) / s(i);
    for (int i = 0; i < n; ++i) {
      if (problem.lb(i) > -kInf) dphi_b -= mu * dw(i) / (w(i) - problem.lb(i));
      if (problem.ub(i) < kInf) dphi_b += mu * dw(i) / (problem.ub(i) - w(i));
    }
    const double nu_req =
        infeas0 > 1e-12 ? std::max(0.0, dphi_b) / (0.5 * infeas0) : 0.0;
    if (nu < nu_req) nu = 1.5 * nu_req;
    else if (nu > 100.0 * std::max(1.0, nu_req)) nu = 10.0 * std::max(1.0, nu_req);
    const double phi0 = barrier_value(w, s, ws.f) + nu * infeas0;
    const double dphi = dphi_b - nu * infeas0;
    // Non-monotone reference: compare against the worst merit value over a
    // short history instead of the current one. Strict monotonicity forces a
    // crawl through curved, nearly degenerate valleys of the merit surface.
    // The penalty weight changes between iterations, so the history stores
    // (barrier, infeasibility) pairs and re-prices them at the current weight.
    phi_hist.push_back({phi0 - nu * infeas0, infeas0});
    if (phi_hist.size() > 8) phi_hist.pop_front();
    // Only relax monotonicity once the iterate is nearly feasible; allowing
    // merit increases while the constraints are still badly violated lets the
    // early iterations wander off and blow up the multipliers.
    double phi_ref = phi0;
    if (primal_inf <= 1e-3)
      for (const auto& [b, v] : phi_hist) phi_ref = std::max(phi_ref, b + nu * v);

    double alpha = alpha_p;
    bool accepted = false;
    Eigen::VectorXd w_trial, s_trial, ce_trial, ci_trial;
    double f_trial = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      w_trial = w + alpha * dw;
      s_trial = s + alpha * ds;
      bool eval_ok = true;
      try {
        f_trial = problem.objective(w_trial);
        problem.constraints(w_trial, ce_trial, ci_trial);
      } catch (const std::exception&) {
        // Point left the model's domain (e.g. nonpositive rope length);
        // treat like any other unacceptable trial and backtrack.
        eval_ok = false;
        f_trial = kInf;
      }
      if (eval_ok && std::isfinite(f_trial) && finite(ce_trial) &&
          finite(ci_trial)) {
        const double infeas =
            ce_trial.lpNorm<1>() + (ci_trial - s_trial).lpNorm<1>();
        const double phi = barrier_value(w_trial, s_trial, f_trial) + nu * infeas;
        if (phi <= phi_ref + 1e-4 * alpha * dphi) {
          accepted = true;
          break;
        }
        // Second-order correction: when the first trial is rejected because
        // the constraint curvature inflated the violation (the step itself
        // reduces the barrier), retry with a correction that restores the
        // linearized equalities at the trial point. Without it the merit
        // rejects every nearly-full step close to the solution.
        if (me > 0 && alpha >= 1e-3 &&
            ce_trial.lpNorm<1>() > (1.0 - 0.5 * alpha) * ws.c_eq.lpNorm<1>()) {
          const Eigen::VectorXd c_soc = alpha * ws.c_eq + ce_trial;
          const Eigen::VectorXd d_soc = -hinv_jet * llt_s.solve(c_soc);
          Eigen::VectorXd dw_c = alpha * dw + d_soc;
          Eigen::VectorXd ds_c = alpha * ds;
          if (mi > 0) ds_c += ws.j_ineq * d_soc;
          double a_c = max_step(s, ds_c, opts.tau);
          for (int i = 0; i < n; ++i) {
            if (problem.lb(i) > -kInf && dw_c(i) < 0.0)
              a_c = std::min(a_c, -opts.tau * (w(i) - problem.lb(i)) / dw_c(i));
            if (problem.ub(i) < kInf && dw_c(i) > 0.0)
              a_c = std::min(a_c, opts.tau * (problem.ub(i) - w(i)) / dw_c(i));
          }
          const Eigen::VectorXd w_c = w + a_c * dw_c;
          const Eigen::VectorXd s_c = s + a_c * ds_c;
          double f_c = kInf;
          Eigen::VectorXd ce_c, ci_c;
          try {
            f_c = problem.objective(w_c);
            problem.constraints(w_c, ce_c, ci_c);
          } catch (const std::exception&) {
            f_c = kInf;
          }
          if (std::isfinite(f_c) && finite(ce_c) && finite(ci_c)) {
            const double infeas_c = ce_c.lpNorm<1>() + (ci_c - s_c).lpNorm<1>();
            const double phi_c = barrier_value(w_c, s_c, f_c) + nu * infeas_c;
            if (phi_c <= phi_ref + 1e-4 * alpha * dphi) {
              w_trial = w_c;
              s_trial = s_c;
              f_trial = f_c;
              ce_trial = ce_c;
              ci_trial = ci_c;
              accepted = true;
              break;
            }
          }
        }
      }
      alpha *= 0.5;
      if (alpha < 1e-12) break;
    }
    if (!accepted) {
      ++bad_steps;
      if (bad_steps >= 8) {
        // A tiny step with persistent infeasibility is the stall signature.
        // Reducing the barrier parameter often unlocks progress (the barrier
        // surface flattens near the active set), so only give up at mu_min.
        if (mu > mu_min && primal_inf <= 10.0 * mu) {
          mu = std::max(mu_min, opts.mu_reduction * mu);
          restarted_at_mu = false;
          phi_hist.clear();
          stall_count = 0;
          bad_steps = 0;
          continue;
        }
        // A stall at a nearly feasible point is not evidence of
        // infeasibility; only claim it when the residual is genuinely large.
        out.status = (primal_inf > std::sqrt(tol)) ? SolveStatus::infeasible_detected
                                                   : SolveStatus::stalled;
        out.iterations = iter;
        out.w = w;
        out.multipliers = {y_eq, y_in, z_lo, z_up};
        out.slacks = s;
        return out;
      }
      // Fresh curvature model, then take the guarded small step anyway.
      if (!exact_hessian) {
        bfgs = Eigen::MatrixXd::Identity(n, n);
        bfgs_scaled = false;
        have_prev = false;
      }
      if (!std::isfinite(f_trial) || !finite(ce_trial) || !finite(ci_trial) ||
          barrier_value(w_trial, s_trial, f_trial) == kInf) {
        w_trial = w;
        s_trial = s;
        alpha = 0.0;
      }
    } else {
      bad_steps = 0;
    }
    if (alpha < 1e-3 || !accepted) {
      ++stall_count;
      if (stall_count >= 40 && (alpha < 1e-8 || !accepted)) {
        if (mu > mu_min && primal_inf <= 10.0 * mu) {
          mu = std::max(mu_min, opts.mu_reduction * mu);
          restarted_at_mu = false;
          phi_hist.clear();
          stall_count = 0;
          bad_steps = 0;
          continue;
        }
        // A stall at a nearly feasible point is not evidence of
        // infeasibility; only claim it when the residual is genuinely large.
        out.status = (primal_inf > std::sqrt(tol)) ? SolveStatus::infeasible_detected
                                                   : SolveStatus::stalled;
        out.iterations = iter;
        out.w = w;
        out.multipliers = {y_eq, y_in, z_lo, z_up};
        out.slacks = s;
        return out;
      }
    } else {
      stall_count = 0;
    }

    w = w_trial;
    s = s_trial;
    if (me > 0) y_eq += alpha * dy_eq;
    // When the line search cut the primal step hard, scale the dual steps
    // down with it: repeated full dual steps against a stalled primal
    // iterate let the bound multipliers random-walk away from centrality.
    const double alpha_z = std::min(alpha_d, std::max(alpha, 1e-2 * alpha_d));
    if (mi > 0) y_in += alpha_z * dy_in;
    z_lo += alpha_z * dz_lo;
    z_up += alpha_z * dz_up;

    // Keep duals within a moderate multiple of their central estimates so
    // the condensed diagonal cannot blow up.
    constexpr double kSigmaCap = 1e4;
    for (int i = 0; i < mi; ++i)
      y_in(i) = std::clamp(y_in(i), mu / (kSigmaCap * s(i)), kSigmaCap * mu / s(i));
    for (int i = 0; i < n; ++i) {
      if (problem.lb(i) > -kInf) {
        const double gap = w(i) - problem.lb(i);
        z_lo(i) = std::clamp(z_lo(i), mu / (kSigmaCap * gap), kSigmaCap * mu / gap);
      }
      if (problem.ub(i) < kInf) {
        const double gap = problem.ub(i) - w(i);
        z_up(i) = std::clamp(z_up(i), mu / (kSigmaCap * gap), kSigmaCap * mu / gap);
      }
    }

    ws.eval(w);

    IterationRecord rec;
    rec.iter = iter;
    rec.objective = ws.f;
    rec.primal_infeasibility = primal_inf;
    rec.dual_infeasibility = dual_inf;
    rec.mu = mu;
    rec.step_length = alpha;
    out.log.push_back(rec);
    if (opts.verbose && opts.log_stream) {
      double min_s = mi > 0 ? s.minCoeff() : 0.0;
      double min_ci = mi > 0 ? ws.c_ineq.minCoeff() : 0.0;
      double ce_inf = me > 0 ? inf_norm(ws.c_eq) : 0.0;
      char line[300];
      std::snprintf(line, sizeof(line),
                    "%4d  %14.7e  %10.3e  %10.3e  %8.1e  %8.1e  |ye|%8.1e |yi|%8.1e "
                    "|zl|%8.1e |zu|%8.1e d%8.1e ce%8.1e mins%8.1e minci%8.1e ap%8.1e az%8.1e |dw|%8.1e\n",
                    rec.iter, rec.objective, rec.primal_infeasibility,
                    rec.dual_infeasibility, rec.mu, rec.step_length, inf_norm(y_eq),
                    inf_norm(y_in), inf_norm(z_lo), inf_norm(z_up), delta,
                    ce_inf, min_s, min_ci, alpha_p, alpha_z, inf_norm(dw));
      (*opts.log_stream) << line;
    }
  }

  if (out.status != SolveStatus::converged && iter >= opts.max_iterations)
    out.status = SolveStatus::max_iterations;
  out.w = w;
  out.multipliers = {y_eq, y_in, z_lo, z_up};
  out.slacks = s;
  out.iterations = iter;
  return out;
}

}  // namespace crane
