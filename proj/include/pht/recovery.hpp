#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "pht/basis.hpp"
#include "pht/geometry.hpp"
#include "pht/interp.hpp"
#include "pht/parallel.hpp"
#include "pht/tmesh.hpp"

namespace pht {

enum class SamplingPolicy { VerticesOnly, Enriched };

inline constexpr int kQuarticTerms = 15;
inline constexpr double kRankTolerance = 1e-8;

/// Monomials (1, x, y, x^2, xy, y^2, x^3, x^2y, xy^2, y^3, x^4, x^3y, x^2y^2, xy^3, y^4).
inline std::array<double, kQuarticTerms> quartic_monomials(double x, double y) {
  std::array<double, kQuarticTerms> m{};
  int k = 0;
  const double xp[5] = {1, x, x * x, x * x * x, x * x * x * x};
  const double yp[5] = {1, y, y * y, y * y * y, y * y * y * y};
  for (int d = 0; d <= 4; ++d)
    for (int j = 0; j <= d; ++j) m[k++] = xp[d - j] * yp[j];
  return m;
}

struct RecoverySample {
  double dx = 0, dy = 0;  // parametric offset from the patch center
  int elem = -1;          // element the sample is evaluated on
  double u = 0, v = 0;    // local coordinates in that element
};

struct RecoveryPatch {
  int center = -1;  // vertex id
  int rings = 0;
  std::vector<int> elements;
  std::vector<RecoverySample> samples;
  double h = 0;
  SamplingPolicy policy = SamplingPolicy::Enriched;

  /// Design matrix in the scaled coordinates ((x,y) - z) / h.
  Eigen::MatrixXd design() const {
    Eigen::MatrixXd A(samples.size(), kQuarticTerms);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto m = quartic_monomials(samples[i].dx / h, samples[i].dy / h);
      for (int k = 0; k < kQuarticTerms; ++k) A(i, k) = m[k];
    }
    return A;
  }
};

namespace detail {

inline void gather_samples(const HierarchicalTMesh& mesh, const MeshVertex& z, const std::vector<int>& elems,
                           SamplingPolicy policy, std::vector<RecoverySample>& out) {
  auto offset = [&](Coord dx, Coord dy, double fx, double fy, Coord size) {
    return std::array<double, 2>{mesh.span_x(dx) + fx * mesh.span_x(size), mesh.span_y(dy) + fy * mesh.span_y(size)};
  };
  std::vector<int> seen;
  for (int e : elems) {
    const auto& el = mesh.element(e);
    const DyadicPoint lo = el.lo, hi = el.corner(1, 1);
    for (int t : mesh.elements_touching(lo, hi)) {
      const auto& te = mesh.element(t);
      for (int cy = 0; cy < 2; ++cy)
        for (int cx = 0; cx < 2; ++cx) {
          const DyadicPoint p = te.corner(cx, cy);
          if (p.ix < lo.ix || p.ix > hi.ix || p.iy < lo.iy || p.iy > hi.iy) continue;
          const int vid = mesh.find_vertex(p);
          if (vid < 0 || !mesh.vertex(vid).is_basis()) continue;
          if (std::find(seen.begin(), seen.end(), vid) != seen.end()) continue;
          seen.push_back(vid);
          const auto o = offset(p.ix - z.key.ix, p.iy - z.key.iy, 0, 0, 0);
          out.push_back({o[0], o[1], e, static_cast<double>(p.ix - lo.ix) / static_cast<double>(el.size()),
                         static_cast<double>(p.iy - lo.iy) / static_cast<double>(el.size())});
        }
    }
    if (policy == SamplingPolicy::Enriched) {
      static const double g = 0.5 / std::sqrt(3.0);
      static const std::array<std::array<double, 2>, 5> pts{
          {{0.5, 0.5}, {0.5 - g, 0.5 - g}, {0.5 + g, 0.5 - g}, {0.5 - g, 0.5 + g}, {0.5 + g, 0.5 + g}}};
      for (const auto& q : pts) {
        const auto o = offset(lo.ix - z.key.ix, lo.iy - z.key.iy, q[0], q[1], el.size());
        out.push_back({o[0], o[1], e, q[0], q[1]});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const RecoverySample& a, const RecoverySample& b) {
    return a.dy != b.dy ? a.dy < b.dy : a.dx < b.dx;
  });
}

inline double max_pairwise_distance(const std::vector<RecoverySample>& s) {
  double h2 = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const double ex = s[i].dx - s[j].dx, ey = s[i].dy - s[j].dy;
      h2 = std::max(h2, ex * ex + ey * ey);
    }
  return std::sqrt(h2);
}

inline bool full_rank(const Eigen::MatrixXd& A) {
  if (A.rows() < kQuarticTerms) return false;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
  return sv[kQuarticTerms - 1] > kRankTolerance * sv[0];
}

}  // namespace detail

/// Smallest ring patch around a basis vertex that determines a quartic.
inline RecoveryPatch build_patch(const HierarchicalTMesh& mesh, int vertex_id,
                                 SamplingPolicy policy = SamplingPolicy::Enriched) {
  const auto& z = mesh.vertex(vertex_id);
  if (!z.is_basis()) throw std::invalid_argument("recovery patch requested at a T-junction");
  RecoveryPatch p;
  p.center = vertex_id;
  p.policy = policy;
  std::size_t prev = 0;
  for (int n = 1;; ++n) {
    auto elems = mesh.layer(vertex_id, n);
    if (elems.size() == prev) {
      std::ostringstream os;
      os << "recovery patch at vertex " << vertex_id << " cannot determine a quartic (" << p.samples.size()
         << " samples over the whole mesh)";
      throw std::runtime_error(os.str());
    }
    prev = elems.size();
    p.rings = n;
    p.elements = std::move(elems);
    p.samples.clear();
    detail::gather_samples(mesh, z, p.elements, policy, p.samples);
    p.h = detail::max_pairwise_distance(p.samples);
    if (p.h > 0 && detail::full_rank(p.design())) return p;
  }
}

struct QuarticFit {
  std::array<double, kQuarticTerms> a{};  // scaled coefficients
  double residual = 0;
};

/// Least-squares quartic in scaled coordinates (Householder QR).
inline QuarticFit fit_quartic(const RecoveryPatch& patch, const Eigen::VectorXd& values) {
  if (values.size() != static_cast<Eigen::Index>(patch.samples.size()))
    throw std::invalid_argument("sample value count differs from patch");
  const Eigen::MatrixXd A = patch.design();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < kQuarticTerms) {
    std::ostringstream os;
    os << "rank-deficient quartic fit at vertex " << patch.center;
    throw std::runtime_error(os.str());
  }
  const Eigen::VectorXd a = qr.solve(values);
  QuarticFit f;
  for (int k = 0; k < kQuarticTerms; ++k) f.a[k] = a[k];
  f.residual = (A * a - values).norm();
  return f;
}

/// Hadamard scaling of the fitted coefficients into (G p^x, G p^y).
inline std::array<GeometricInfo, 2> recovered_jets(const QuarticFit& fit, double h) {
  const auto& a = fit.a;
  const double h2 = h * h, h3 = h2 * h;
  return {GeometricInfo{a[1] / h, 2 * a[3] / h2, a[4] / h2, 2 * a[7] / h3},
          GeometricInfo{a[2] / h, a[4] / h2, 2 * a[5] / h2, 2 * a[8] / h3}};
}

/// Linear map from sample values to the 8 jet entries
/// (G p^x; G p^y) = weights * values.
struct RecoveryStencil {
  RecoveryPatch patch;
  Eigen::Matrix<double, 8, Eigen::Dynamic> weights;
};

inline RecoveryStencil recovery_stencil(const HierarchicalTMesh& mesh, int vertex_id,
                                        SamplingPolicy policy = SamplingPolicy::Enriched) {
  RecoveryStencil s{build_patch(mesh, vertex_id, policy), {}};
  const Eigen::MatrixXd A = s.patch.design();
  const auto m = A.rows();
  const Eigen::MatrixXd pinv = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(A).solve(Eigen::MatrixXd::Identity(m, m));
  const double h = s.patch.h, h2 = h * h, h3 = h2 * h;
  Eigen::Matrix<double, 8, kQuarticTerms> L = Eigen::Matrix<double, 8, kQuarticTerms>::Zero();
  L(0, 1) = 1 / h;
  L(1, 3) = 2 / h2;
  L(2, 4) = 1 / h2;
  L(3, 7) = 2 / h3;
  L(4, 2) = 1 / h;
  L(5, 4) = 1 / h2;
  L(6, 5) = 2 / h2;
  L(7, 8) = 2 / h3;
  s.weights = L * pinv;
  return s;
}

/// Values of a spline at the samples of a patch.
inline Eigen::VectorXd sample_values(const RecoveryPatch& patch, const SplineFunction& u) {
  Eigen::VectorXd b(patch.samples.size());
  for (std::size_t i = 0; i < patch.samples.size(); ++i) {
    const auto& s = patch.samples[i];
    b[i] = u.eval_local(s.elem, s.u, s.v).v;
  }
  return b;
}

/// Recovered gradient: two splines on the parametric domain, pushed forward
/// through the geometry on evaluation.
struct RecoveredGradient {
  SplineFunction gx, gy;
  GeometryMap geometry = GeometryMap::identity();

  Eigen::Vector2d parametric(double s, double t) const { return {gx.eval(s, t).v, gy.eval(s, t).v}; }
  Eigen::Vector2d parametric_local(int elem, double u, double v) const {
    return {gx.eval_local(elem, u, v).v, gy.eval_local(elem, u, v).v};
  }
  Eigen::Vector2d physical(double s, double t) const {
    const Eigen::Vector2d g = parametric(s, t);
    return geometry.is_identity() ? g : push_forward_gradient(geometry.jacobian(s, t), g, s, t);
  }
};

struct RecoveryOptions {
  SamplingPolicy policy = SamplingPolicy::Enriched;
  int jobs = 1;
};

/// G_h u_h: per basis vertex, fit a quartic on its patch and interpolate the
/// jets of its gradient. Runs on the parametric domain.
inline RecoveredGradient recover(const SplineFunction& uh, const GeometryMap& geometry = GeometryMap::identity(),
                                 const RecoveryOptions& opts = {}) {
  const auto& basis = *uh.basis;
  const auto& mesh = basis.mesh();
  InterpolationOperator I(uh.basis);
  RecoveredGradient g{SplineFunction(uh.basis), SplineFunction(uh.basis), geometry};
  parallel_for(basis.num_anchors(), opts.jobs, [&](std::size_t k) {
    const int vid = basis.anchors()[k];
    try {
      const auto patch = build_patch(mesh, vid, opts.policy);
      const auto jets = recovered_jets(fit_quartic(patch, sample_values(patch, uh)), patch.h);
      I.set_block(g.gx.coeffs, static_cast<int>(k), jets[0]);
      I.set_block(g.gy.coeffs, static_cast<int>(k), jets[1]);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "recovery at vertex " << vid << ": " << e.what();
      throw std::runtime_error(os.str());
    }
  });
  return g;
}

/// Samples the physical recovered gradient on an n x n parametric grid as
/// CSV "x,y,gx,gy".
inline void export_gradient_csv(std::ostream& os, const RecoveredGradient& g, int n) {
  os << "x,y,gx,gy\n";
  os.precision(12);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const double s = static_cast<double>(i) / n, t = static_cast<double>(j) / n;
      const auto p = g.geometry.map(s, t);
      Eigen::Vector2d v;
      try {
        v = g.physical(s, t);
      } catch (const std::domain_error&) {
        continue;  // degenerate map point (e.g. disk corners)
      }
      os << p.x() << ',' << p.y() << ',' << v.x() << ',' << v.y() << '\n';
    }
}

}  // namespace pht
