#include "crane/nlp.hpp"

#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCore>

namespace crane {

namespace {

struct Maps {
  int n_full = 0;
  int n_red = 0;
  int me_full = 0;
  int me_red = 0;
  std::vector<int> var_old2new;   // -1 for fixed
  std::vector<int> var_new2old;
  std::vector<double> fixed_value;  // by full index, 0 for free
  std::vector<int> eq_old2new;    // -1 for dropped
};

Eigen::VectorXd expand_vec(const Maps& m, const Eigen::VectorXd& wr) {
  Eigen::VectorXd w(m.n_full);
  for (int i = 0; i < m.n_full; ++i)
    w(i) = m.var_old2new[i] >= 0 ? wr(m.var_old2new[i]) : m.fixed_value[i];
  return w;
}

}  // namespace

ReducedProblem eliminate_fixed(const NlpProblem& full,
                               const std::vector<FixedVariable>& fixed,
                               const std::vector<int>& drop_eq) {
  auto m = std::make_shared<Maps>();
  m->n_full = full.num_vars;
  m->me_full = full.num_eq;
  m->var_old2new.assign(full.num_vars, 0);
  m->fixed_value.assign(full.num_vars, 0.0);
  for (const auto& f : fixed) {
    if (f.index < 0 || f.index >= full.num_vars)
      throw std::domain_error("eliminate_fixed: variable index out of range");
    m->var_old2new[f.index] = -1;
    m->fixed_value[f.index] = f.value;
  }
  for (int i = 0; i < full.num_vars; ++i)
    if (m->var_old2new[i] >= 0) {
      m->var_old2new[i] = m->n_red++;
      m->var_new2old.push_back(i);
    }
  m->eq_old2new.assign(full.num_eq, 0);
  for (int r : drop_eq) {
    if (r < 0 || r >= full.num_eq)
      throw std::domain_error("eliminate_fixed: equality row out of range");
    m->eq_old2new[r] = -1;
  }
  for (int r = 0; r < full.num_eq; ++r)
    if (m->eq_old2new[r] >= 0) m->eq_old2new[r] = m->me_red++;

  ReducedProblem red;
  red.expand = [m](const Eigen::VectorXd& wr) { return expand_vec(*m, wr); };
  red.restrict_vars = [m](const Eigen::VectorXd& w) {
    Eigen::VectorXd wr(m->n_red);
    for (int j = 0; j < m->n_red; ++j) wr(j) = w(m->var_new2old[j]);
    return wr;
  };
  red.expand_eq = [m](const Eigen::VectorXd& yr) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m->me_full);
    for (int r = 0; r < m->me_full; ++r)
      if (m->eq_old2new[r] >= 0) y(r) = yr(m->eq_old2new[r]);
    return y;
  };

  NlpProblem& p = red.problem;
  p.num_vars = m->n_red;
  p.num_eq = m->me_red;
  p.num_ineq = full.num_ineq;
  p.lb.resize(m->n_red);
  p.ub.resize(m->n_red);
  for (int j = 0; j < m->n_red; ++j) {
    p.lb(j) = full.lb(m->var_new2old[j]);
    p.ub(j) = full.ub(m->var_new2old[j]);
  }

  p.objective = [m, obj = full.objective](const Eigen::VectorXd& wr) {
    return obj(expand_vec(*m, wr));
  };
  p.gradient = [m, grad = full.gradient](const Eigen::VectorXd& wr) {
    const Eigen::VectorXd g = grad(expand_vec(*m, wr));
    Eigen::VectorXd gr(m->n_red);
    for (int j = 0; j < m->n_red; ++j) gr(j) = g(m->var_new2old[j]);
    return gr;
  };
  p.constraints = [m, cons = full.constraints](const Eigen::VectorXd& wr,
                                               Eigen::VectorXd& ce,
                                               Eigen::VectorXd& ci) {
    Eigen::VectorXd ce_full;
    cons(expand_vec(*m, wr), ce_full, ci);
    ce.resize(m->me_red);
    for (int r = 0; r < m->me_full; ++r)
      if (m->eq_old2new[r] >= 0) ce(m->eq_old2new[r]) = ce_full(r);
  };
  p.jacobians = [m, jac = full.jacobians](const Eigen::VectorXd& wr,
                                          Eigen::SparseMatrix<double>& je,
                                          Eigen::SparseMatrix<double>& ji) {
    Eigen::SparseMatrix<double> je_full, ji_full;
    jac(expand_vec(*m, wr), je_full, ji_full);
    std::vector<Eigen::Triplet<double>> te, ti;
    for (int col = 0; col < je_full.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(je_full, col); it; ++it) {
        const int r = m->eq_old2new[it.row()];
        const int c = m->var_old2new[it.col()];
        if (r >= 0 && c >= 0) te.emplace_back(r, c, it.value());
      }
    for (int col = 0; col < ji_full.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(ji_full, col); it; ++it) {
        const int c = m->var_old2new[it.col()];
        if (c >= 0) ti.emplace_back(it.row(), c, it.value());
      }
    je.resize(m->me_red, m->n_red);
    je.setFromTriplets(te.begin(), te.end());
    ji.resize(ji_full.rows(), m->n_red);
    ji.setFromTriplets(ti.begin(), ti.end());
  };
  if (full.lagrangian_hessian) {
    p.lagrangian_hessian = [m, hess = full.lagrangian_hessian](
                               const Eigen::VectorXd& wr, const Eigen::VectorXd& yr,
                               const Eigen::VectorXd& yi, double floor) {
      Eigen::VectorXd y = Eigen::VectorXd::Zero(m->me_full);
      for (int r = 0; r < m->me_full; ++r)
        if (m->eq_old2new[r] >= 0) y(r) = yr(m->eq_old2new[r]);
      const Eigen::SparseMatrix<double> h = hess(expand_vec(*m, wr), y, yi, floor);
      std::vector<Eigen::Triplet<double>> th;
      for (int col = 0; col < h.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(h, col); it; ++it) {
          const int r = m->var_old2new[it.row()];
          const int c = m->var_old2new[it.col()];
          if (r >= 0 && c >= 0) th.emplace_back(r, c, it.value());
        }
      Eigen::SparseMatrix<double> hr(m->n_red, m->n_red);
      hr.setFromTriplets(th.begin(), th.end());
      return hr;
    };
  }
  for (const auto& [r, c] : full.eq_pattern)
    if (m->eq_old2new[r] >= 0 && m->var_old2new[c] >= 0)
      p.eq_pattern.emplace_back(m->eq_old2new[r], m->var_old2new[c]);
  for (const auto& [r, c] : full.ineq_pattern)
    if (m->var_old2new[c] >= 0) p.ineq_pattern.emplace_back(r, m->var_old2new[c]);
  return red;
}

}  // namespace crane
