#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pht/basis.hpp"
#include "pht/jet.hpp"

namespace pht {

/// Scalar field written once against `Jet` arithmetic: calling it with
/// Jet::var_x / Jet::var_y seeds yields value and derivatives.
using ScalarField = std::function<Jet(const Jet&, const Jet&)>;

struct Jacobian {
  Eigen::Matrix2d m = Eigen::Matrix2d::Identity();  // rows x,y; cols s,t
  double det() const { return m.determinant(); }
};

/// Map from the parametric square to the physical domain.
class GeometryMap {
 public:
  enum class Kind { Identity, AnalyticPolar, AnalyticDisk, RationalPht };

  static GeometryMap identity() { return GeometryMap(Kind::Identity); }
  /// Quarter annulus 1/2 < rho < 1, 0 < phi < pi/2 with rho = (1+s)/2, phi = t*pi/2.
  static GeometryMap polar_annulus() { return GeometryMap(Kind::AnalyticPolar); }
  /// Unit disk from the square, (u sqrt(1-v^2/2), v sqrt(1-u^2/2)) with u = 2s-1, v = 2t-1.
  static GeometryMap disk() { return GeometryMap(Kind::AnalyticDisk); }

  /// F = sum P_i w_i phi_i / sum w_j phi_j over a PHT basis.
  static GeometryMap rational(std::shared_ptr<const PhtBasis> basis, const std::vector<Eigen::Vector2d>& points,
                              const std::vector<double>& weights) {
    if (points.size() != basis->size() || weights.size() != basis->size())
      throw std::invalid_argument("control net size differs from basis size");
    GeometryMap g(Kind::RationalPht);
    g.wx_ = SplineFunction(basis);
    g.wy_ = SplineFunction(basis);
    g.w_ = SplineFunction(basis);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!(weights[i] > 0)) throw std::invalid_argument("control weights must be positive");
      g.wx_.coeffs[i] = points[i].x() * weights[i];
      g.wy_.coeffs[i] = points[i].y() * weights[i];
      g.w_.coeffs[i] = weights[i];
    }
    return g;
  }

  /// Control net file: one "id x y w" line per basis function.
  static GeometryMap load_rational(std::shared_ptr<const PhtBasis> basis, std::istream& is) {
    std::vector<Eigen::Vector2d> pts(basis->size());
    std::vector<double> w(basis->size(), 0.0);
    std::vector<bool> seen(basis->size(), false);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      long id;
      double x, y, ww;
      if (!(ls >> id >> x >> y >> ww)) throw std::runtime_error("control net: bad line " + std::to_string(lineno));
      if (id < 0 || id >= static_cast<long>(basis->size()))
        throw std::runtime_error("control net: id out of range on line " + std::to_string(lineno));
      pts[id] = {x, y};
      w[id] = ww;
      seen[id] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (!seen[i]) throw std::runtime_error("control net: missing id " + std::to_string(i));
    return rational(std::move(basis), pts, w);
  }

  Kind kind() const { return kind_; }
  bool is_identity() const { return kind_ == Kind::Identity; }
  std::string name() const {
    switch (kind_) {
      case Kind::Identity: return "identity";
      case Kind::AnalyticPolar: return "annulus";
      case Kind::AnalyticDisk: return "disk";
      case Kind::RationalPht: return "rational";
    }
    return "?";
  }

  /// Physical coordinates as jets in (s, t).
  std::array<Jet, 2> map_jet(double s, double t) const {
    const Jet S = Jet::var_x(s), T = Jet::var_y(t);
    switch (kind_) {
      case Kind::Identity: return {S, T};
      case Kind::AnalyticPolar: {
        const Jet rho = 0.5 + 0.5 * S;
        const Jet phi = (0.5 * std::numbers::pi) * T;
        return {rho * cos(phi), rho * sin(phi)};
      }
      case Kind::AnalyticDisk: {
        const Jet u = 2.0 * S - 1.0, v = 2.0 * T - 1.0;
        return {u * sqrt(1.0 - 0.5 * v * v), v * sqrt(1.0 - 0.5 * u * u)};
      }
      case Kind::RationalPht: {
        const int e = w_.basis->mesh().locate(s, t);
        const auto& r = w_.basis->mesh().element(e).rect;
        const double lu = (s - r.x0) / r.width(), lv = (t - r.y0) / r.height();
        const Jet inv = reciprocal(w_.eval_local(e, lu, lv));
        return {wx_.eval_local(e, lu, lv) * inv, wy_.eval_local(e, lu, lv) * inv};
      }
    }
    return {S, T};
  }

  Eigen::Vector2d map(double s, double t) const {
    const auto f = map_jet(s, t);
    return {f[0].v, f[1].v};
  }

  Jacobian jacobian(double s, double t) const {
    const auto f = map_jet(s, t);
    Jacobian j;
    j.m << f[0].dx, f[0].dy, f[1].dx, f[1].dy;
    return j;
  }

  /// Jet of f o F with respect to (s, t).
  Jet pull_back(const ScalarField& f, double s, double t) const {
    const auto xy = map_jet(s, t);
    return f(xy[0], xy[1]);
  }

 private:
  explicit GeometryMap(Kind k) : kind_(k) {}

  Kind kind_;
  SplineFunction wx_, wy_, w_;
};

/// J^-T g: physical gradient from a parametric one.
inline Eigen::Vector2d push_forward_gradient(const Jacobian& j, const Eigen::Vector2d& g, double s = NAN,
                                             double t = NAN) {
  const double d = j.det();
  if (!(std::abs(d) > 1e-14 * std::max(1.0, j.m.cwiseAbs().maxCoeff()))) {
    std::ostringstream os;
    os << "singular Jacobian (det " << d << ") at (" << s << ", " << t << ")";
    throw std::domain_error(os.str());
  }
  // J^-T = adj(J)^T / det
  return Eigen::Vector2d(j.m(1, 1) * g.x() - j.m(1, 0) * g.y(), -j.m(0, 1) * g.x() + j.m(0, 0) * g.y()) / d;
}

/// Physical (value, gradient) of a field at the image of (s, t).
inline Jet physical_jet(const ScalarField& f, const GeometryMap& g, double s, double t) {
  const auto p = g.map(s, t);
  return f(Jet::var_x(p.x()), Jet::var_y(p.y()));
}

}  // namespace pht
