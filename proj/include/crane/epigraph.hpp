#ifndef CRANE_EPIGRAPH_HPP
#define CRANE_EPIGRAPH_HPP

#include <array>

#include "crane/spatial.hpp"

namespace crane {

// Per-interval affine parametrization z(x_p) = eta1 * x_p + eta0 of one
// epigraph auxiliary variable.
struct AuxCoeffs {
  double eta1 = 0.0;  // W/m
  double eta0 = 0.0;  // W
};

template <class T>
T aux_value(const T& eta1, const T& eta0, double x_p) {
  return eta1 * x_p + eta0;
}

inline double aux_value(const AuxCoeffs& c, double x_p) {
  return c.eta1 * x_p + c.eta0;
}

// The four epigraph inequalities at one evaluation point, as residuals
// that are nonnegative when feasible:
//   z_T - P_T, z_T - gamma_T * P_T, z_H - P_H, z_H - gamma_H * P_H.
// P_T uses the full trolley velocity expression (sway and hoist terms
// included), P_H = -F_H * l_dot.
template <class T>
std::array<T, 4> epigraph_constraints(const SpatialVec<T>& x, const ControlT<T>& u,
                                      const T& z_t, const T& z_h, const CraneParams& p) {
  const T s = sin(x[sx::theta]);
  const T c = cos(x[sx::theta]);
  const T trolley_vel =
      x[sx::x_p_dot] - s * x[sx::l_dot] - x[sx::l] * c * x[sx::theta_dot];
  const T p_t = u.f_t * trolley_vel;
  const T p_h = -u.f_h * x[sx::l_dot];
  return {z_t - p_t, z_t - p.gamma_t * p_t, z_h - p_h, z_h - p.gamma_h * p_h};
}

}  // namespace crane

#endif  // CRANE_EPIGRAPH_HPP
