#ifndef CRANE_SPATIAL_HPP
#define CRANE_SPATIAL_HPP

#include <array>
#include <stdexcept>
#include <vector>

#include "crane/dynamics.hpp"

namespace crane {

// Spatially reparametrized state, indexed by payload position x_p.
inline constexpr int kNumSpatialStates = 10;

namespace sx {
enum Index {
  t = 0,          // elapsed time (s)
  x_p_dot = 1,    // trolley-direction payload velocity (m/s)
  y_p = 2,        // payload depth below rail (m)
  y_p_dot = 3,    //
  l = 4,          // rope length (m)
  l_dot = 5,      //
  theta = 6,      // sway angle (rad)
  theta_dot = 7,  //
  e_t = 8,        // accumulated trolley energy (J)
  e_h = 9,        // accumulated hoist energy (J)
};
}  // namespace sx

template <class T>
using SpatialVec = std::array<T, kNumSpatialStates>;
using SpatialState = SpatialVec<double>;

// Uniform discretization of [xp0, xpf].
struct SpatialGrid {
  double xp0 = 0.0;
  double xpf = 1.0;
  int k = 50;  // interval count

  void validate() const {
    if (!(xpf > xp0)) throw std::domain_error("SpatialGrid: xpf must exceed xp0");
    if (k < 2) throw std::domain_error("SpatialGrid: need at least 2 intervals");
  }
  double dx() const { return (xpf - xp0) / k; }
  double point(int i) const { return xp0 + i * dx(); }
  std::vector<double> points() const {
    std::vector<double> p(k + 1);
    for (int i = 0; i <= k; ++i) p[i] = point(i);
    return p;
  }
};

// Right-hand side f of the implicit spatial dynamics x2 * x' = f.
// Written out from the equations of motion directly so it can be
// cross-checked against time_derivatives; never divides by x2.
template <class T>
SpatialVec<T> spatial_rhs(const SpatialVec<T>& x, const ControlT<T>& u, const T& z_t,
                          const T& z_h, const CraneParams& p) {
  if (!(value_of(x[sx::l]) > 0.0)) throw std::domain_error("spatial_rhs: rope length l <= 0");
  const T s = sin(x[sx::theta]);
  const T c = cos(x[sx::theta]);
  SpatialVec<T> f;
  f[0] = T(1.0);
  f[1] = -(u.f_h * s) / p.m2;
  f[2] = x[sx::y_p_dot];
  f[3] = -(u.f_h * c) / p.m2 + p.g;
  f[4] = x[sx::l_dot];
  f[5] = x[sx::l] * x[sx::theta_dot] * x[sx::theta_dot] + p.g * c - u.f_h / p.m2 -
         s * (u.f_t + u.f_h * s) / p.m1;
  f[6] = x[sx::theta_dot];
  f[7] = -(2.0 * x[sx::l_dot] * x[sx::theta_dot] + p.g * s + c * (u.f_t + u.f_h * s) / p.m1) /
         x[sx::l];
  f[8] = z_t;
  f[9] = z_h;
  return f;
}

// Residual of the implicit dynamics: x2 * x' - f. Zero iff the spatial
// dynamics hold; well defined even where x2 = 0.
template <class T>
SpatialVec<T> implicit_residual(const SpatialVec<T>& x, const SpatialVec<T>& x_prime,
                                const ControlT<T>& u, const T& z_t, const T& z_h,
                                const CraneParams& p) {
  const SpatialVec<T> f = spatial_rhs(x, u, z_t, z_h, p);
  SpatialVec<T> r;
  for (int i = 0; i < kNumSpatialStates; ++i) r[i] = x[sx::x_p_dot] * x_prime[i] - f[i];
  return r;
}

// J = alpha * t_f + (1 - alpha) * (E_T + E_H), all read off the final state.
inline double mayer_objective(const SpatialState& final_state, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::domain_error("mayer_objective: alpha outside [0,1]");
  return alpha * final_state[sx::t] +
         (1.0 - alpha) * (final_state[sx::e_t] + final_state[sx::e_h]);
}

inline TimeState time_state_from_spatial(const SpatialState& s, double x_p) {
  TimeState x;
  x.x_p = x_p;
  x.x_p_dot = s[sx::x_p_dot];
  x.y_p = s[sx::y_p];
  x.y_p_dot = s[sx::y_p_dot];
  x.l = s[sx::l];
  x.l_dot = s[sx::l_dot];
  x.theta = s[sx::theta];
  x.theta_dot = s[sx::theta_dot];
  return x;
}

}  // namespace crane

#endif  // CRANE_SPATIAL_HPP
