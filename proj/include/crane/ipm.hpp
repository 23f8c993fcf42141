#ifndef CRANE_IPM_HPP
#define CRANE_IPM_HPP

#include <ostream>
#include <string>
#include <vector>

#include "crane/nlp.hpp"

namespace crane {

struct SolverOptions {
  double kkt_tolerance = 1e-6;
  int max_iterations = 500;
  double mu_init = 0.1;
  double mu_reduction = 0.2;      // monotone barrier reduction factor
  double tau = 0.995;             // fraction-to-boundary
  double regularization_floor = 1e-8;
  bool verbose = false;
  std::ostream* log_stream = nullptr;  // used when verbose

  void validate() const;
};

enum class SolveStatus {
  converged,             // scaled KKT error below tolerance
  max_iterations,        // iteration budget exhausted
  stalled,               // line search stopped making progress at a
                         // nearly feasible (but not optimal) point
  infeasible_detected,   // stalled with a large equality residual
  numerical_failure,     // factorization or regularization gave up
};

std::string to_string(SolveStatus s);

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double mu = 0.0;
  double step_length = 0.0;
};

struct Multipliers {
  Eigen::VectorXd eq;      // equality constraints
  Eigen::VectorXd ineq;    // general inequalities (>= 0)
  Eigen::VectorXd z_lower; // variable lower bounds
  Eigen::VectorXd z_upper; // variable upper bounds
};

struct SolveOutcome {
  Eigen::VectorXd w;
  Multipliers multipliers;
  Eigen::VectorXd slacks;
  SolveStatus status = SolveStatus::numerical_failure;
  int iterations = 0;
  std::vector<IterationRecord> log;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_ineq = 0.0;  // violation of c_ineq >= 0 and variable bounds
  double complementarity = 0.0;

  double max() const;
};

// Primal-dual interior-point solve: slacks for the inequalities, log
// barrier on slacks and bound gaps with monotone mu reduction, damped
// BFGS model of the Lagrangian Hessian, regularized Newton steps,
// fraction-to-boundary step limiting, and an l1 merit line search.
SolveOutcome solve(const NlpProblem& problem, const Eigen::VectorXd& w0,
                   const SolverOptions& opts = {});

KktResiduals kkt_residuals(const NlpProblem& problem, const Eigen::VectorXd& w,
                           const Multipliers& multipliers);

}  // namespace crane

#endif  // CRANE_IPM_HPP
