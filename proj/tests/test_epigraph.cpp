#include <doctest.h>

#include <random>

#include "crane/epigraph.hpp"

using namespace crane;

TEST_CASE("aux_value is affine") {
  AuxCoeffs c{2.0, -1.0};
  CHECK(aux_value(c, 0.0) == doctest::Approx(-1.0));
  CHECK(aux_value(c, 0.5) == doctest::Approx(0.0));
  CHECK(aux_value(c, 2.0) == doctest::Approx(3.0));
  CHECK(aux_value(2.0, -1.0, 0.25) == doctest::Approx(-0.5));
}

TEST_CASE("epigraph residuals against hand-computed powers") {
  CraneParams p;
  p.gamma_t = 0.8;
  p.gamma_h = 0.6;
  SpatialState x{};
  x[sx::x_p_dot] = 1.5;
  x[sx::y_p] = 0.5;
  x[sx::l] = 0.5;
  x[sx::l_dot] = -0.2;  // hauling in
  x[sx::theta] = 0.0;
  x[sx::theta_dot] = 0.0;
  const Control u{2.0, 6.0};
  // Trolley velocity = 1.5 (no sway), P_T = 3.0; P_H = -6*(-0.2) = 1.2.
  const auto r = epigraph_constraints(x, u, 4.0, 1.0, p);
  CHECK(r[0] == doctest::Approx(4.0 - 3.0));
  CHECK(r[1] == doctest::Approx(4.0 - 2.4));
  CHECK(r[2] == doctest::Approx(1.0 - 1.2));
  CHECK(r[3] == doctest::Approx(1.0 - 0.72));
}

TEST_CASE("epigraph powers include sway and hoist terms in trolley velocity") {
  CraneParams p;
  SpatialState x{};
  x[sx::x_p_dot] = 1.0;
  x[sx::l] = 0.5;
  x[sx::l_dot] = 0.3;
  x[sx::theta] = 0.1;
  x[sx::theta_dot] = -0.4;
  const Control u{1.0, 0.0};
  const double vel =
      1.0 - std::sin(0.1) * 0.3 - 0.5 * std::cos(0.1) * (-0.4);
  const auto r = epigraph_constraints(x, u, 0.0, 0.0, p);
  CHECK(r[0] == doctest::Approx(-vel));
}

TEST_CASE("feasible z dominates the regenerated power flow") {
  // For any P, z satisfying both z >= P and z >= gamma*P also satisfies
  // z >= max(P, gamma*P) = regen_power_flow(P, gamma), and the tightest
  // such z attains it. Sample randomly on both signs of P.
  CraneParams p;
  p.gamma_t = 0.8;
  p.gamma_h = 0.8;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u01(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    SpatialState x{};
    x[sx::x_p_dot] = 1.0 + u01(rng);
    x[sx::l] = 0.5 + 0.3 * std::abs(u01(rng));
    x[sx::l_dot] = u01(rng);
    x[sx::theta] = 0.1 * u01(rng);
    x[sx::theta_dot] = u01(rng);
    const Control u{2.0 * u01(rng), 4.0 + 4.0 * u01(rng)};

    const TimeState xt = time_state_from_spatial(x, 0.0);
    const PowerPair pw = actuator_power(xt, u);
    const double flow_t = regen_power_flow(pw.p_t, p.gamma_t);
    const double flow_h = regen_power_flow(pw.p_h, p.gamma_h);

    // The tightest feasible z is exactly the regenerated flow.
    const auto tight = epigraph_constraints(x, u, flow_t, flow_h, p);
    for (double r : tight) CHECK(r >= -1e-12);
    CHECK(std::abs(std::min(tight[0], tight[1])) <= 1e-12);
    CHECK(std::abs(std::min(tight[2], tight[3])) <= 1e-12);

    // Anything strictly below the flow violates one of the pair.
    const auto low = epigraph_constraints(x, u, flow_t - 1e-3, flow_h - 1e-3, p);
    CHECK(std::min(low[0], low[1]) < 0.0);
    CHECK(std::min(low[2], low[3]) < 0.0);
  }
}

TEST_CASE("gamma = 1 collapses each pair to a single constraint") {
  CraneParams p;
  p.gamma_t = 1.0;
  p.gamma_h = 1.0;
  SpatialState x{};
  x[sx::x_p_dot] = 1.0;
  x[sx::l] = 0.5;
  x[sx::l_dot] = 0.5;
  const Control u{-1.0, 3.0};
  const auto r = epigraph_constraints(x, u, 0.7, 0.9, p);
  CHECK(r[0] == doctest::Approx(r[1]));
  CHECK(r[2] == doctest::Approx(r[3]));
}
