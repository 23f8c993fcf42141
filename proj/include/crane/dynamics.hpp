#ifndef CRANE_DYNAMICS_HPP
#define CRANE_DYNAMICS_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "crane/dual.hpp"

namespace crane {

using std::cos;
using std::sin;

// Physical configuration of the cart-pendulum-with-hoist model.
struct CraneParams {
  double m1 = 1.0;       // trolley mass (kg)
  double m2 = 0.5;       // payload mass (kg)
  double g = 9.81;       // gravity (m/s^2)
  double gamma_t = 0.8;  // trolley regeneration efficiency
  double gamma_h = 0.8;  // hoist regeneration efficiency

  void validate() const {
    if (!(m1 > 0.0)) throw std::domain_error("CraneParams: trolley mass must be positive");
    if (!(m2 > 0.0)) throw std::domain_error("CraneParams: payload mass must be positive");
    if (!(g > 0.0)) throw std::domain_error("CraneParams: gravity must be positive");
    if (!(gamma_t >= 0.0 && gamma_t <= 1.0))
      throw std::domain_error("CraneParams: gamma_t outside [0,1]");
    if (!(gamma_h >= 0.0 && gamma_h <= 1.0))
      throw std::domain_error("CraneParams: gamma_h outside [0,1]");
  }
};

// Time-domain state. y_p and l are measured positive downward from the
// trolley rail; the rope length l must stay positive.
template <class T>
struct TimeStateT {
  T x_p{};
  T x_p_dot{};
  T y_p{};
  T y_p_dot{};
  T l{};
  T l_dot{};
  T theta{};
  T theta_dot{};
};
using TimeState = TimeStateT<double>;

template <class T>
struct ControlT {
  T f_t{};  // trolley drive force (N)
  T f_h{};  // hoist rope tension (N)
};
using Control = ControlT<double>;

template <class T>
struct PowerPairT {
  T p_t{};
  T p_h{};
};
using PowerPair = PowerPairT<double>;

// Right-hand side of the equations of motion, in state order
// [x_p, x_p_dot, y_p, y_p_dot, l, l_dot, theta, theta_dot].
template <class T>
std::array<T, 8> time_derivatives(const TimeStateT<T>& x, const ControlT<T>& u,
                                  const CraneParams& p) {
  if (!(value_of(x.l) > 0.0)) throw std::domain_error("time_derivatives: rope length l <= 0");
  const T s = sin(x.theta);
  const T c = cos(x.theta);
  const T rope_reaction = (u.f_t + u.f_h * s) / p.m1;
  std::array<T, 8> dx;
  dx[0] = x.x_p_dot;
  dx[1] = -(u.f_h * s) / p.m2;
  dx[2] = x.y_p_dot;
  dx[3] = -(u.f_h * c) / p.m2 + p.g;
  dx[4] = x.l_dot;
  dx[5] = x.l * x.theta_dot * x.theta_dot + p.g * c - u.f_h / p.m2 - s * rope_reaction;
  dx[6] = x.theta_dot;
  dx[7] = -(2.0 * x.l_dot * x.theta_dot + p.g * s + c * rope_reaction) / x.l;
  return dx;
}

// Trolley position and velocity implied by the payload/rope coordinates.
template <class T>
std::pair<T, T> trolley_kinematics(const TimeStateT<T>& x) {
  const T s = sin(x.theta);
  const T c = cos(x.theta);
  T pos = x.x_p - s * x.l;
  T vel = x.x_p_dot - s * x.l_dot - x.l * c * x.theta_dot;
  return {std::move(pos), std::move(vel)};
}

template <class T>
PowerPairT<T> actuator_power(const TimeStateT<T>& x, const ControlT<T>& u) {
  auto [pos, vel] = trolley_kinematics(x);
  (void)pos;
  PowerPairT<T> pw;
  pw.p_t = u.f_t * vel;
  pw.p_h = -u.f_h * x.l_dot;
  return pw;
}

// Power flow of a subsystem with energy recovery: max(P, gamma*P).
inline double regen_power_flow(double power, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::domain_error("regen_power_flow: efficiency outside [0,1]");
  return std::max(power, gamma * power);
}

// Kinetic energy of trolley and payload plus payload potential energy.
// Downward-positive y_p makes the potential term -m2*g*y_p; the trolley
// rides a horizontal rail so its potential term is constant and omitted.
inline double mechanical_energy(const TimeState& x, const CraneParams& p) {
  const auto [pos, vel] = trolley_kinematics(x);
  (void)pos;
  const double ke_trolley = 0.5 * p.m1 * vel * vel;
  const double ke_payload = 0.5 * p.m2 * (x.x_p_dot * x.x_p_dot + x.y_p_dot * x.y_p_dot);
  const double pe_payload = -p.m2 * p.g * x.y_p;
  return ke_trolley + ke_payload + pe_payload;
}

}  // namespace crane

#endif  // CRANE_DYNAMICS_HPP
