#include <doctest.h>

#include <random>

#include "crane/oracle.hpp"
#include "crane/spatial.hpp"

using namespace crane;

namespace {

SpatialState equilibrium_state() {
  SpatialState s{};
  s[sx::t] = 0.3;
  s[sx::x_p_dot] = 1.0;
  s[sx::y_p] = 3.0;
  s[sx::l] = 3.0;
  return s;
}

}  // namespace

TEST_CASE("spatial rhs at hanging equilibrium with unit speed") {
  CraneParams p;
  p.m2 = 1.0;
  const SpatialState s = equilibrium_state();
  const auto f = spatial_rhs(s, Control{0.0, p.m2 * p.g}, 0.0, 0.0, p);
  CHECK(f[0] == doctest::Approx(1.0));
  for (int i = 1; i < kNumSpatialStates; ++i) CHECK(f[i] == doctest::Approx(0.0));
}

TEST_CASE("energy rows are direct aux assignments") {
  CraneParams p;
  const auto f = spatial_rhs(equilibrium_state(), Control{0.2, 1.0}, 0.3, 0.7, p);
  CHECK(f[sx::e_t] == doctest::Approx(0.3));
  CHECK(f[sx::e_h] == doctest::Approx(0.7));
}

TEST_CASE("spatial rhs matches the time-domain model on random samples") {
  CraneParams p;
  p.m1 = 1.3;
  p.m2 = 0.7;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u01(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    SpatialState s;
    s[sx::t] = 1.0 + u01(rng);
    s[sx::x_p_dot] = 2.0 + u01(rng);
    s[sx::y_p] = 2.0 + u01(rng);
    s[sx::y_p_dot] = u01(rng);
    s[sx::l] = 2.0 + std::abs(u01(rng));
    s[sx::l_dot] = u01(rng);
    s[sx::theta] = 0.3 * u01(rng);
    s[sx::theta_dot] = u01(rng);
    s[sx::e_t] = u01(rng);
    s[sx::e_h] = u01(rng);
    const Control u{u01(rng), 5.0 * u01(rng)};
    const double x_p = u01(rng);
    const auto f = spatial_rhs(s, u, 0.0, 0.0, p);
    const auto dx = time_derivatives(time_state_from_spatial(s, x_p), u, p);
    for (int j = 1; j < 8; ++j) CHECK(f[j] == doctest::Approx(dx[j]).epsilon(1e-14));
  }
}

TEST_CASE("implicit residual is definitional") {
  CraneParams p;
  const SpatialState s = [] {
    SpatialState q = equilibrium_state();
    q[sx::x_p_dot] = 2.0;
    q[sx::theta] = 0.05;
    q[sx::l_dot] = 0.2;
    return q;
  }();
  const Control u{0.3, 4.0};
  const auto f = spatial_rhs(s, u, 0.1, 0.2, p);
  SpatialVec<double> sprime;
  for (int i = 0; i < kNumSpatialStates; ++i) sprime[i] = f[i] / s[sx::x_p_dot];
  const auto r = implicit_residual(s, sprime, u, 0.1, 0.2, p);
  for (double v : r) CHECK(v == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("stationary points cannot satisfy the time row") {
  CraneParams p;
  SpatialState s = equilibrium_state();
  s[sx::x_p_dot] = 0.0;
  SpatialVec<double> sprime{};
  const auto r = implicit_residual(s, sprime, Control{0.0, p.m2 * p.g}, 0.0, 0.0, p);
  CHECK(r[0] == doctest::Approx(-1.0));
}

TEST_CASE("forward simulation satisfies the spatial residual after resampling") {
  CraneParams p;
  p.m2 = 0.5;
  TimeState x0;
  x0.x_p_dot = 0.5;
  x0.y_p = 0.5;
  x0.l = 0.5;
  auto control = [&](double t) {
    return Control{0.2 * std::sin(1.7 * t), p.m2 * p.g + 0.3 * std::sin(2.3 * t)};
  };
  const double t_end = 1.5;
  const TimeTrajectory traj = integrate(control, x0, p, t_end, t_end / 20000.0);
  double worst = 0.0;
  for (size_t i = 0; i < traj.t.size(); i += 37) {
    const TimeState& x = traj.states[i];
    REQUIRE(x.x_p_dot >= 0.1);
    const Control u = traj.controls[i];
    const auto dx = time_derivatives(x, u, p);
    SpatialState s{};
    s[sx::t] = traj.t[i];
    s[sx::x_p_dot] = x.x_p_dot;
    s[sx::y_p] = x.y_p;
    s[sx::y_p_dot] = x.y_p_dot;
    s[sx::l] = x.l;
    s[sx::l_dot] = x.l_dot;
    s[sx::theta] = x.theta;
    s[sx::theta_dot] = x.theta_dot;
    const PowerPair pw = traj.powers[i];
    SpatialVec<double> sprime;
    sprime[0] = 1.0 / x.x_p_dot;
    for (int j = 1; j < 8; ++j) sprime[j] = dx[j] / x.x_p_dot;
    sprime[8] = pw.p_t / x.x_p_dot;
    sprime[9] = pw.p_h / x.x_p_dot;
    const auto r = implicit_residual(s, sprime, u, pw.p_t, pw.p_h, p);
    for (double v : r) worst = std::max(worst, std::abs(v));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("mayer objective") {
  SpatialState s{};
  s[sx::t] = 2.5;
  s[sx::e_t] = 7.0;
  s[sx::e_h] = 9.0;
  CHECK(mayer_objective(s, 1.0) == doctest::Approx(2.5));
  s[sx::e_t] = 0.2;
  s[sx::e_h] = 0.3;
  CHECK(mayer_objective(s, 0.0) == doctest::Approx(0.5));
  s[sx::t] = 2.0;
  s[sx::e_t] = 0.4;
  s[sx::e_h] = 0.6;
  CHECK(mayer_objective(s, 0.5) == doctest::Approx(1.5));
  CHECK_THROWS_AS(mayer_objective(s, 1.2), std::domain_error);

  // Affine in alpha: three-point collinearity.
  const double j0 = mayer_objective(s, 0.1);
  const double j1 = mayer_objective(s, 0.5);
  const double j2 = mayer_objective(s, 0.9);
  CHECK(j1 == doctest::Approx(0.5 * (j0 + j2)));
}
