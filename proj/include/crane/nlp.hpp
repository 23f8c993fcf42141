#ifndef CRANE_NLP_HPP
#define CRANE_NLP_HPP

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace crane {

// Finite-dimensional program
//   min f(w)  s.t.  c_eq(w) = 0,  c_ineq(w) >= 0,  lb <= w <= ub,
// with exact first derivatives and fixed Jacobian sparsity patterns.
struct NlpProblem {
  int num_vars = 0;
  int num_eq = 0;
  int num_ineq = 0;

  Eigen::VectorXd lb;  // -inf where unbounded
  Eigen::VectorXd ub;  // +inf where unbounded

  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::VectorXd&)> constraints;
  std::function<void(const Eigen::VectorXd&, Eigen::SparseMatrix<double>&,
                     Eigen::SparseMatrix<double>&)>
      jacobians;

  // Optional Hessian of the Lagrangian
  //   f(w) - y_eq' c_eq(w) - y_ineq' c_ineq(w)
  // at (w, y). When provided the solver uses it in place of its
  // quasi-Newton model. `curvature_floor > 0` requests a convexified
  // model whose eigenvalues are clipped from below at the floor;
  // `curvature_floor <= 0` requests the exact Hessian.
  std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                            const Eigen::VectorXd&, double)>
      lagrangian_hessian;

  // Structural nonzeros (row, col), supersets of the true nonzeros.
  std::vector<std::pair<int, int>> eq_pattern;
  std::vector<std::pair<int, int>> ineq_pattern;
};

// A variable held at a constant value.
struct FixedVariable {
  int index = 0;
  double value = 0.0;
};

// A problem over the free variables only, produced by eliminate_fixed.
struct ReducedProblem {
  NlpProblem problem;
  // Insert the fixed values back into a reduced vector.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> expand;
  // Select the free components of a full vector.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> restrict_vars;
  // Insert zeros at the dropped equality rows of a reduced multiplier vector.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> expand_eq;
};

// Substitutes the fixed variables into the problem and removes the listed
// equality rows, which must be satisfied identically by the fixed values
// (e.g. single-variable boundary pins). Eliminating a pinned variable
// instead of carrying variable + pin row keeps the equality Jacobian well
// conditioned: a pin on a state that multiplies the dynamics (such as a
// zero boundary velocity) otherwise makes the pin row and the adjacent
// collocation rows nearly linearly dependent.
ReducedProblem eliminate_fixed(const NlpProblem& full,
                               const std::vector<FixedVariable>& fixed,
                               const std::vector<int>& drop_eq);

}  // namespace crane

#endif  // CRANE_NLP_HPP
