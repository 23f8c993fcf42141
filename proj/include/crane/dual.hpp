#ifndef CRANE_DUAL_HPP
#define CRANE_DUAL_HPP

#include <Eigen/Core>
#include <cmath>

namespace crane {

// Forward-mode scalar: value plus a dense gradient w.r.t. a small set of
// local seed variables. An empty gradient vector means "constant".
class Dual {
public:
  double v = 0.0;
  Eigen::VectorXd d;

  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, int n, int seed_index) : v(value), d(Eigen::VectorXd::Zero(n)) {
    d(seed_index) = 1.0;
  }

  bool constant() const { return d.size() == 0; }

  Dual& operator+=(const Dual& o) { *this = *this + o; return *this; }
  Dual& operator-=(const Dual& o) { *this = *this - o; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend Dual operator-(const Dual& a) {
    Dual r(-a.v);
    if (!a.constant()) r.d = -a.d;
    return r;
  }

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r(a.v + b.v);
    if (a.constant()) r.d = b.d;
    else if (b.constant()) r.d = a.d;
    else r.d = a.d + b.d;
    return r;
  }

  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r(a.v - b.v);
    if (a.constant()) { if (!b.constant()) r.d = -b.d; }
    else if (b.constant()) r.d = a.d;
    else r.d = a.d - b.d;
    return r;
  }

  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.v * b.v);
    if (a.constant()) { if (!b.constant()) r.d = a.v * b.d; }
    else if (b.constant()) r.d = b.v * a.d;
    else r.d = b.v * a.d + a.v * b.d;
    return r;
  }

  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r(a.v / b.v);
    if (a.constant()) { if (!b.constant()) r.d = (-a.v / (b.v * b.v)) * b.d; }
    else if (b.constant()) r.d = a.d / b.v;
    else r.d = a.d / b.v - (a.v / (b.v * b.v)) * b.d;
    return r;
  }

  friend Dual sin(const Dual& a) {
    Dual r(std::sin(a.v));
    if (!a.constant()) r.d = std::cos(a.v) * a.d;
    return r;
  }

  friend Dual cos(const Dual& a) {
    Dual r(std::cos(a.v));
    if (!a.constant()) r.d = -std::sin(a.v) * a.d;
    return r;
  }

  friend Dual sqrt(const Dual& a) {
    const double s = std::sqrt(a.v);
    Dual r(s);
    if (!a.constant()) r.d = (0.5 / s) * a.d;
    return r;
  }
};

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

}  // namespace crane

#endif  // CRANE_DUAL_HPP
