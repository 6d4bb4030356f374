#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "pht/basis.hpp"
#include "pht/geometry.hpp"
#include "pht/parallel.hpp"
#include "pht/quadrature.hpp"
#include "pht/recovery.hpp"

namespace pht {

/// Physical-domain quantities at one quadrature point of an element.
struct GradientPoint {
  double w = 0;                 // weight * |det J|
  Eigen::Vector2d x;            // physical point
  Eigen::Vector2d grad_h;       // grad u_h
  Eigen::Vector2d grad_rec;     // G_h u_h (zero if no recovery given)
};

/// Calls f(point) for each Gauss point of one element.
template <class F>
void for_each_gradient_point(const SplineFunction& uh, const RecoveredGradient* g, const GeometryMap& geo, int e,
                             int order, F&& f) {
  const auto& r = uh.basis->mesh().element(e).rect;
  for (const auto& q : quadrature_points(r, order)) {
    GradientPoint p;
    const Jacobian J = geo.jacobian(q.x, q.y);
    const Jet j = uh.eval_local(e, q.u, q.v);
    p.w = q.w * std::abs(J.det());
    p.x = geo.map(q.x, q.y);
    const Eigen::Vector2d gh(j.dx, j.dy);
    if (geo.is_identity()) {
      p.grad_h = gh;
      p.grad_rec = g ? g->parametric_local(e, q.u, q.v) : Eigen::Vector2d::Zero();
    } else {
      p.grad_h = push_forward_gradient(J, gh, q.x, q.y);
      p.grad_rec = g ? push_forward_gradient(J, g->parametric_local(e, q.u, q.v), q.x, q.y) : Eigen::Vector2d::Zero();
    }
    f(p);
  }
}

struct ErrorNorms {
  double err_grad = 0;  // ||grad u - grad u_h||
  double err_rec = 0;   // ||grad u - G_h u_h||
};

/// L2 gradient errors over a set of elements (physical measure).
inline ErrorNorms error_norms(const ScalarField& u, const SplineFunction& uh, const RecoveredGradient* g,
                              const GeometryMap& geo, const std::vector<int>& region, int order = 5, int jobs = 1) {
  std::vector<std::array<double, 2>> part(region.size());
  parallel_for(region.size(), jobs, [&](std::size_t i) {
    double a = 0, b = 0;
    for_each_gradient_point(uh, g, geo, region[i], order, [&](const GradientPoint& p) {
      const Jet ex = u(Jet::var_x(p.x.x()), Jet::var_y(p.x.y()));
      const Eigen::Vector2d ge(ex.dx, ex.dy);
      a += p.w * (ge - p.grad_h).squaredNorm();
      if (g) b += p.w * (ge - p.grad_rec).squaredNorm();
    });
    part[i] = {a, b};
  });
  ErrorNorms n;
  for (const auto& [a, b] : part) {
    n.err_grad += a;
    n.err_rec += b;
  }
  n.err_grad = std::sqrt(n.err_grad);
  n.err_rec = std::sqrt(n.err_rec);
  return n;
}

/// |u_h|_1 over all active elements.
inline double h1_seminorm(const SplineFunction& uh, const GeometryMap& geo, int order = 5) {
  double s = 0;
  for (int e : uh.basis->mesh().active_elements())
    for_each_gradient_point(uh, nullptr, geo, e, order, [&](const GradientPoint& p) { s += p.w * p.grad_h.squaredNorm(); });
  return std::sqrt(s);
}

/// ||G_h u_h||_0 over all active elements.
inline double recovered_l2(const SplineFunction& uh, const RecoveredGradient& g, int order = 5) {
  double s = 0;
  for (int e : uh.basis->mesh().active_elements())
    for_each_gradient_point(uh, &g, g.geometry, e, order,
                            [&](const GradientPoint& p) { s += p.w * p.grad_rec.squaredNorm(); });
  return std::sqrt(s);
}

}  // namespace pht
