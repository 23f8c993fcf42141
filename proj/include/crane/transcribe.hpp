#ifndef CRANE_TRANSCRIBE_HPP
#define CRANE_TRANSCRIBE_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "crane/epigraph.hpp"
#include "crane/ipm.hpp"
#include "crane/nlp.hpp"
#include "crane/stack.hpp"

namespace crane {

// Per-component fixed values of the boundary states; nullopt means free.
struct BoundarySpec {
  std::array<std::optional<double>, kNumSpatialStates> initial{};
  std::array<std::optional<double>, kNumSpatialStates> final{};
};

struct InputBounds {
  double ft_min = -1.0;
  double ft_max = 1.0;
  double fh_min = 0.0;
  double fh_max = 8.0;
};

struct StateBounds {
  double l_min = 0.01;
  double l_max = 0.75;
  double theta_max = 0.1;
  // Strictly positive velocity floor at interior grid points; the two
  // boundary points keep the plain x2 >= 0 bound.
  double interior_vx_min = 1e-3;
};

struct OcpSpec {
  CraneParams params;
  SpatialGrid grid;
  StackProfile profile;
  double alpha = 0.5;
  BoundarySpec boundary;
  InputBounds input_bounds;
  StateBounds state_bounds;

  void validate() const;
};

// Decision vector layout: [states at K+1 points | controls | eta_T | eta_H].
struct VariableLayout {
  int k = 0;
  int num_vars() const { return kNumSpatialStates * (k + 1) + 6 * k; }
  int state(int point, int component) const { return kNumSpatialStates * point + component; }
  int control(int interval, int component) const {
    return kNumSpatialStates * (k + 1) + 2 * interval + component;
  }
  int eta_t(int interval, int component) const {
    return kNumSpatialStates * (k + 1) + 2 * k + 2 * interval + component;
  }
  int eta_h(int interval, int component) const {
    return kNumSpatialStates * (k + 1) + 4 * k + 2 * interval + component;
  }
};

struct DiscretizedSolution {
  SpatialGrid grid;
  double alpha = 0.5;
  std::vector<SpatialState> states;   // K+1
  std::vector<Control> controls;      // K
  std::vector<AuxCoeffs> eta_t;       // K
  std::vector<AuxCoeffs> eta_h;       // K
  double objective = 0.0;
  std::string status;
  int iterations = 0;
};

// Assemble the sparse NLP: implicit-midpoint collocation equalities,
// epigraph inequalities at both interval endpoints and the midpoint,
// boundary equalities, and corridor/box variable bounds.
NlpProblem transcribe(const OcpSpec& spec);

// Boundary states pinned to fixed values by the OCP. In the transcription
// they occupy the equality rows 10k .. 10k + count - 1, in this order.
std::vector<FixedVariable> boundary_pins(const OcpSpec& spec);

Eigen::VectorXd initial_guess(const OcpSpec& spec);

struct Derivatives {
  Eigen::VectorXd gradient;
  Eigen::SparseMatrix<double> jac_eq;
  Eigen::SparseMatrix<double> jac_ineq;
};

// First derivatives at w with a finiteness check naming the bad entry.
Derivatives evaluate_derivatives(const NlpProblem& problem, const Eigen::VectorXd& w);

DiscretizedSolution unpack_solution(const OcpSpec& spec, const SolveOutcome& outcome);
Eigen::VectorXd pack_solution(const DiscretizedSolution& sol);

// Smallest epigraph gap min(z - P, z - gamma*P) per evaluation point for
// each subsystem, and the max over all of them.
struct TightnessReport {
  std::vector<double> trolley_gaps;
  std::vector<double> hoist_gaps;
  double max_gap = 0.0;
};

TightnessReport tightness_report(const DiscretizedSolution& sol, const CraneParams& params);

// The objective touches each interval's aux function only through its
// midpoint value, so the affine slope is free at an optimum. Re-select
// the slope that balances the endpoint gaps while keeping the midpoint
// value (and hence the objective and the collocation residuals) fixed;
// the result is an equally optimal point with the tightest epigraph.
void tighten_aux(DiscretizedSolution& sol, const CraneParams& params);

}  // namespace crane

#endif  // CRANE_TRANSCRIBE_HPP
