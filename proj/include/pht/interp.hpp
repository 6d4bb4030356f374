#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "pht/basis.hpp"
#include "pht/jet.hpp"
#include "pht/tmesh.hpp"

namespace pht {

/// (f, f_x, f_y, f_xy) at a point.
struct GeometricInfo {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dxy = 0.0;

  Eigen::Vector4d vec() const { return {value, dx, dy, dxy}; }
  static GeometricInfo from_jet(const Jet& j) { return {j.v, j.dx, j.dy, j.dxy}; }
};

/// Geometric information of a callable `Jet f(Jet x, Jet y)` at (x, y).
template <class F>
GeometricInfo geometric_info(F&& f, double x, double y) {
  return GeometricInfo::from_jet(f(Jet::var_x(x), Jet::var_y(y)));
}

/// Maps the four coefficients of a basis vertex to the geometric
/// information of their combination at the vertex.
struct BMatrix {
  int vertex = -1;
  double du1 = 0, du2 = 0, dv1 = 0, dv2 = 0;
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
};

/// Closed form for four neighbour cells of sizes 3du_a x 3dv_b; du1/dv1 are
/// the left/lower sides. A zero side is allowed on the domain boundary.
inline BMatrix closed_form_b(double du1, double du2, double dv1, double dv2) {
  if (!(du1 + du2 > 0) || !(dv1 + dv2 > 0)) throw std::invalid_argument("B matrix: degenerate cell spans");
  const double a = 1.0 / (du1 + du2), b = 1.0 / (dv1 + dv2);
  const double l = a * du1, u = b * dv1;
  BMatrix r{-1, du1, du2, dv1, dv2, {}};
  r.m << (1 - l) * (1 - u), l * (1 - u), l * u, (1 - l) * u,  //
      -a * (1 - u), a * (1 - u), a * u, -a * u,                //
      -b * (1 - l), -b * l, b * l, b * (1 - l),                //
      a * b, -a * b, a * b, -a * b;
  return r;
}

/// B matrix of a basis vertex from the cells it was created with: cells of
/// the vertex' dyadic level, a third of their size per side, zero on sides
/// outside the domain.
inline BMatrix b_matrix(const HierarchicalTMesh& mesh, int vertex_id) {
  const auto& v = mesh.vertex(vertex_id);
  if (!v.is_basis()) throw std::invalid_argument("B matrix requested at a T-junction");
  const Coord u = level_unit(v.level);
  const double wx = mesh.span_x(u) / 3.0, wy = mesh.span_y(u) / 3.0;
  auto r = closed_form_b(v.key.ix > 0 ? wx : 0.0, v.key.ix < mesh.extent_x() ? wx : 0.0, v.key.iy > 0 ? wy : 0.0,
                         v.key.iy < mesh.extent_y() ? wy : 0.0);
  r.vertex = vertex_id;
  return r;
}

/// Geometric information of one basis function at a mesh vertex, read from
/// an element incident to the vertex.
inline GeometricInfo basis_info_at_vertex(const PhtBasis& basis, int fn, int vertex_id) {
  const auto& mesh = basis.mesh();
  const auto& v = mesh.vertex(vertex_id);
  const int e = mesh.incident_elements(v.key).front();
  const auto& el = mesh.element(e);
  const double u = static_cast<double>(v.key.ix - el.lo.ix) / static_cast<double>(el.size());
  const double w = static_cast<double>(v.key.iy - el.lo.iy) / static_cast<double>(el.size());
  for (const auto& en : basis.entries(e))
    if (en.fn == fn)
      return GeometricInfo::from_jet(scale_local_jet(en.patch.eval_local(u, w), el.rect.width(), el.rect.height()));
  return {};
}

/// B matrix assembled as G(phi^T)(z) from the stored functions.
inline Eigen::Matrix4d evaluated_b_matrix(const PhtBasis& basis, int anchor_pos) {
  Eigen::Matrix4d m;
  const int vid = basis.anchors().at(anchor_pos);
  for (int s = 1; s <= 4; ++s) m.col(s - 1) = basis_info_at_vertex(basis, basis.index(anchor_pos, s), vid).vec();
  return m;
}

/// Throws if B is numerically singular relative to its row scale.
inline void check_conditioning(const BMatrix& b) {
  double scale = 1.0;
  for (int i = 0; i < 4; ++i) scale *= b.m.row(i).norm();
  if (std::abs(b.m.determinant()) < 1e-14 * scale) {
    std::ostringstream os;
    os << "B matrix at vertex " << b.vertex << " is numerically singular";
    throw std::runtime_error(os.str());
  }
}

/// Precomputed inverse B matrices for every anchor of a basis.
class InterpolationOperator {
 public:
  explicit InterpolationOperator(std::shared_ptr<const PhtBasis> basis) : basis_(std::move(basis)) {
    inv_.reserve(basis_->num_anchors());
    for (int vid : basis_->anchors()) {
      const auto b = b_matrix(basis_->mesh(), vid);
      check_conditioning(b);
      inv_.push_back(b.m.inverse());
    }
  }

  const std::shared_ptr<const PhtBasis>& basis() const { return basis_; }
  const Eigen::Matrix4d& b_inverse(int anchor_pos) const { return inv_.at(anchor_pos); }

  /// Writes B^-1 G into the coefficient block of one anchor.
  void set_block(std::vector<double>& coeffs, int anchor_pos, const GeometricInfo& g) const {
    const Eigen::Vector4d c = inv_[anchor_pos] * g.vec();
    for (int s = 0; s < 4; ++s) coeffs[4 * anchor_pos + s] = c[s];
  }

  /// `data[k]` is the target information at anchors()[k].
  SplineFunction interpolate(const std::vector<GeometricInfo>& data) const {
    if (data.size() != basis_->num_anchors())
      throw std::invalid_argument("interpolation data must cover every basis vertex");
    SplineFunction s(basis_);
    for (std::size_t k = 0; k < data.size(); ++k) set_block(s.coeffs, static_cast<int>(k), data[k]);
    return s;
  }

  /// Interpolant of a callable `Jet f(Jet x, Jet y)` in parametric coords.
  template <class F>
  SplineFunction interpolate_function(F&& f) const {
    std::vector<GeometricInfo> data;
    data.reserve(basis_->num_anchors());
    for (int vid : basis_->anchors()) {
      const auto& v = basis_->mesh().vertex(vid);
      data.push_back(geometric_info(f, v.x, v.y));
    }
    return interpolate(data);
  }

 private:
  std::shared_ptr<const PhtBasis> basis_;
  std::vector<Eigen::Matrix4d> inv_;
};

inline SplineFunction interpolate(std::shared_ptr<const PhtBasis> basis, const std::vector<GeometricInfo>& data) {
  return InterpolationOperator(std::move(basis)).interpolate(data);
}

}  // namespace pht
