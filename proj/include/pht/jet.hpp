#pragma once

#include <cmath>

namespace pht {

/// Value of a bivariate function together with its first and second partial
/// derivatives. Doubles as a forward-mode automatic differentiation scalar:
/// arithmetic on `Jet` values propagates derivatives through the chain rule.
struct Jet {
  double v = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dxx = 0.0;
  double dxy = 0.0;
  double dyy = 0.0;

  static constexpr Jet constant(double c) { return {c, 0, 0, 0, 0, 0}; }
  static constexpr Jet var_x(double x) { return {x, 1, 0, 0, 0, 0}; }
  static constexpr Jet var_y(double y) { return {y, 0, 1, 0, 0, 0}; }

  double laplacian() const { return dxx + dyy; }

  Jet& operator+=(const Jet& o) {
    v += o.v; dx += o.dx; dy += o.dy; dxx += o.dxx; dxy += o.dxy; dyy += o.dyy;
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v; dx -= o.dx; dy -= o.dy; dxx -= o.dxx; dxy -= o.dxy; dyy -= o.dyy;
    return *this;
  }
  Jet& operator*=(double s) {
    v *= s; dx *= s; dy *= s; dxx *= s; dxy *= s; dyy *= s;
    return *this;
  }
};

inline Jet operator-(Jet a) { a *= -1.0; return a; }
inline Jet operator+(Jet a, const Jet& b) { a += b; return a; }
inline Jet operator-(Jet a, const Jet& b) { a -= b; return a; }
inline Jet operator*(Jet a, double s) { a *= s; return a; }
inline Jet operator*(double s, Jet a) { a *= s; return a; }
inline Jet operator+(Jet a, double s) { a.v += s; return a; }
inline Jet operator+(double s, Jet a) { a.v += s; return a; }
inline Jet operator-(Jet a, double s) { a.v -= s; return a; }
inline Jet operator-(double s, const Jet& a) { return s + (-a); }

inline Jet operator*(const Jet& f, const Jet& g) {
  return {f.v * g.v,
          f.dx * g.v + f.v * g.dx,
          f.dy * g.v + f.v * g.dy,
          f.dxx * g.v + 2.0 * f.dx * g.dx + f.v * g.dxx,
          f.dxy * g.v + f.dx * g.dy + f.dy * g.dx + f.v * g.dxy,
          f.dyy * g.v + 2.0 * f.dy * g.dy + f.v * g.dyy};
}

/// Composes a scalar function h with f given h(f), h'(f), h''(f).
inline Jet compose(const Jet& f, double h0, double h1, double h2) {
  return {h0,
          h1 * f.dx,
          h1 * f.dy,
          h2 * f.dx * f.dx + h1 * f.dxx,
          h2 * f.dx * f.dy + h1 * f.dxy,
          h2 * f.dy * f.dy + h1 * f.dyy};
}

inline Jet reciprocal(const Jet& g) {
  const double r = 1.0 / g.v;
  return compose(g, r, -r * r, 2.0 * r * r * r);
}

inline Jet operator/(const Jet& f, const Jet& g) { return f * reciprocal(g); }
inline Jet operator/(Jet f, double s) { f *= 1.0 / s; return f; }
inline Jet operator/(double s, const Jet& g) { return s * reciprocal(g); }

inline Jet sin(const Jet& f) {
  const double s = std::sin(f.v), c = std::cos(f.v);
  return compose(f, s, c, -s);
}
inline Jet cos(const Jet& f) {
  const double s = std::sin(f.v), c = std::cos(f.v);
  return compose(f, c, -s, -c);
}
inline Jet atan(const Jet& f) {
  const double q = 1.0 / (1.0 + f.v * f.v);
  return compose(f, std::atan(f.v), q, -2.0 * f.v * q * q);
}
inline Jet sqrt(const Jet& f) {
  const double r = std::sqrt(f.v);
  return compose(f, r, 0.5 / r, -0.25 / (r * f.v));
}
inline Jet exp(const Jet& f) {
  const double e = std::exp(f.v);
  return compose(f, e, e, e);
}

/// Integer power; n >= 0.
inline Jet pow(const Jet& f, int n) {
  if (n == 0) return Jet::constant(1.0);
  const double p2 = n >= 2 ? std::pow(f.v, n - 2) : 0.0;
  const double p1 = n >= 1 ? std::pow(f.v, n - 1) : 0.0;
  return compose(f, std::pow(f.v, n), n * p1, n * (n - 1) * p2);
}

}  // namespace pht
