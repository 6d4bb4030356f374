#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pht/basis.hpp"
#include "pht/geometry.hpp"
#include "pht/interp.hpp"
#include "pht/parallel.hpp"
#include "pht/quadrature.hpp"

namespace pht {

/// -div(A grad u + b u) + c u = f   (weak form: (A grad u + b u).grad v + c u v)
/// with u = g on the boundary. Coefficients are constant.
struct ProblemSpec {
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  double c = 0.0;
  /// Source in physical coordinates.
  std::function<double(double, double)> f;
  /// Dirichlet datum as a jet-capable field in physical coordinates; its
  /// jets at boundary basis vertices fix the boundary coefficients.
  ScalarField g;
  GeometryMap geometry = GeometryMap::identity();
  /// Optional exact solution for error studies.
  ScalarField exact;

  bool symmetric() const { return b.isZero(0.0); }

  void validate() const {
    if (std::abs(A(0, 1) - A(1, 0)) > 1e-14 * A.norm()) throw std::invalid_argument("A must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
    if (!(es.eigenvalues().minCoeff() > 0)) throw std::invalid_argument("A must be positive definite");
    if (!f) throw std::invalid_argument("problem has no source term");
  }
};

/// Manufactured problem: f from the exact solution, g = exact.
inline ProblemSpec manufactured(ScalarField exact, GeometryMap geometry = GeometryMap::identity(),
                                Eigen::Matrix2d A = Eigen::Matrix2d::Identity(),
                                Eigen::Vector2d b = Eigen::Vector2d::Zero(), double c = 0.0) {
  ProblemSpec p;
  p.A = A;
  p.b = b;
  p.c = c;
  p.exact = exact;
  p.g = exact;
  p.geometry = std::move(geometry);
  p.f = [exact, A, b, c](double x, double y) {
    const Jet u = exact(Jet::var_x(x), Jet::var_y(y));
    return -(A(0, 0) * u.dxx + 2 * A(0, 1) * u.dxy + A(1, 1) * u.dyy) - (b.x() * u.dx + b.y() * u.dy) + c * u.v;
  };
  return p;
}

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SparseSystem {
  SparseMatrix K;
  Eigen::VectorXd rhs;
  /// Basis functions fixed by boundary data, and their values.
  std::vector<int> constrained;
  std::vector<double> constrained_values;
  /// dof index of each basis function in the reduced system, -1 if fixed.
  std::vector<int> dof_of;
  std::vector<int> free_dofs;
  bool symmetric = true;
  std::shared_ptr<const PhtBasis> basis;
};

struct AssemblyOptions {
  int quad_order = 4;
  int jobs = 1;
};

/// Physical basis gradients and values at one quadrature point.
struct PointEval {
  Eigen::Matrix<double, 2, Eigen::Dynamic> grad;
  Eigen::VectorXd val;
  double w = 0;  // quadrature weight times |det J|
  double x = 0, y = 0;  // physical point
};

/// Evaluates every basis function on an element at its quadrature points.
inline std::vector<PointEval> element_evaluations(const PhtBasis& basis, const GeometryMap& geo, int e,
                                                  int order) {
  const auto& el = basis.mesh().element(e);
  const auto en = basis.entries(e);
  const int n = static_cast<int>(en.size());
  std::vector<PointEval> out;
  for (const auto& q : quadrature_points(el.rect, order)) {
    PointEval p;
    p.grad.resize(2, n);
    p.val.resize(n);
    const Bernstein3 bu(q.u), bv(q.v);
    const Jacobian J = geo.jacobian(q.x, q.y);
    const double det = J.det();
    if (!(det > 0)) {
      std::ostringstream os;
      os << "nonpositive Jacobian determinant " << det << " in element " << e << " at (" << q.x << ", " << q.y << ")";
      throw std::domain_error(os.str());
    }
    const Eigen::Matrix2d JinvT = J.m.inverse().transpose();
    for (int k = 0; k < n; ++k) {
      const Jet j = en[k].patch.eval_local(bu, bv);
      p.val[k] = j.v;
      p.grad.col(k) = JinvT * Eigen::Vector2d(j.dx / el.rect.width(), j.dy / el.rect.height());
    }
    p.w = q.w * det;
    const auto xy = geo.map(q.x, q.y);
    p.x = xy.x();
    p.y = xy.y();
    out.push_back(std::move(p));
  }
  return out;
}

/// Galerkin matrix and load vector over all basis functions (no boundary
/// conditions applied yet).
inline SparseSystem assemble(std::shared_ptr<const PhtBasis> basis, const ProblemSpec& prob,
                             const AssemblyOptions& opts = {}) {
  prob.validate();
  const auto& mesh = basis->mesh();
  const auto elems = mesh.active_elements();
  const int N = static_cast<int>(basis->size());

  struct Local {
    Eigen::MatrixXd K;
    Eigen::VectorXd F;
  };
  std::vector<Local> local(elems.size());
  parallel_for(elems.size(), opts.jobs, [&](std::size_t i) {
    const int e = elems[i];
    const int n = static_cast<int>(basis->entries(e).size());
    Local& L = local[i];
    L.K = Eigen::MatrixXd::Zero(n, n);
    L.F = Eigen::VectorXd::Zero(n);
    for (const auto& p : element_evaluations(*basis, prob.geometry, e, opts.quad_order)) {
      const Eigen::MatrixXd AG = prob.A * p.grad;
      L.K.noalias() += p.w * (p.grad.transpose() * AG);
      if (!prob.b.isZero(0.0)) L.K.noalias() += p.w * ((p.grad.transpose() * prob.b) * p.val.transpose());
      if (prob.c != 0.0) L.K.noalias() += (p.w * prob.c) * (p.val * p.val.transpose());
      L.F += (p.w * prob.f(p.x, p.y)) * p.val;
    }
  });

  SparseSystem sys;
  sys.basis = basis;
  sys.symmetric = prob.symmetric();
  sys.rhs = Eigen::VectorXd::Zero(N);
  std::vector<Eigen::Triplet<double>> trip;
  std::size_t nnz = 0;
  for (const auto& L : local) nnz += L.K.size();
  trip.reserve(nnz);
  for (std::size_t i = 0; i < elems.size(); ++i) {
    const auto en = basis->entries(elems[i]);
    for (std::size_t a = 0; a < en.size(); ++a) {
      sys.rhs[en[a].fn] += local[i].F[a];
      for (std::size_t c = 0; c < en.size(); ++c) trip.emplace_back(en[a].fn, en[c].fn, local[i].K(a, c));
    }
  }
  sys.K.resize(N, N);
  sys.K.setFromTriplets(trip.begin(), trip.end());
  sys.dof_of.resize(N);
  for (int i = 0; i < N; ++i) sys.dof_of[i] = i;
  sys.free_dofs = sys.dof_of;
  return sys;
}

/// Boundary coefficient blocks B^-1 G g^ where g^ = g o F in parametric
/// coordinates. Returns (function index, value) for every boundary-vertex
/// function.
inline std::vector<std::pair<int, double>> boundary_coefficients(const PhtBasis& basis, const ProblemSpec& prob) {
  if (!prob.g) throw std::invalid_argument("Dirichlet datum has no jet data");
  const auto& mesh = basis.mesh();
  std::vector<std::pair<int, double>> out;
  for (std::size_t k = 0; k < basis.num_anchors(); ++k) {
    const int vid = basis.anchors()[k];
    const auto& v = mesh.vertex(vid);
    if (v.kind != VertexKind::Boundary) continue;
    const auto gi = GeometricInfo::from_jet(prob.geometry.pull_back(prob.g, v.x, v.y));
    const Eigen::Vector4d c = b_matrix(mesh, vid).m.inverse() * gi.vec();
    for (int s = 0; s < 4; ++s) out.emplace_back(basis.index(static_cast<int>(k), s + 1), c[s]);
  }
  return out;
}

/// Fixes boundary coefficients and eliminates them from the system.
inline SparseSystem apply_dirichlet(const SparseSystem& full, const ProblemSpec& prob) {
  const auto& basis = *full.basis;
  const int N = static_cast<int>(basis.size());
  SparseSystem r;
  r.basis = full.basis;
  r.symmetric = full.symmetric;
  std::vector<double> fixed(N, 0.0);
  std::vector<char> is_fixed(N, 0);
  for (const auto& [fn, val] : boundary_coefficients(basis, prob)) {
    is_fixed[fn] = 1;
    fixed[fn] = val;
    r.constrained.push_back(fn);
    r.constrained_values.push_back(val);
  }
  r.dof_of.assign(N, -1);
  for (int i = 0; i < N; ++i)
    if (!is_fixed[i]) {
      r.dof_of[i] = static_cast<int>(r.free_dofs.size());
      r.free_dofs.push_back(i);
    }
  const int n = static_cast<int>(r.free_dofs.size());
  r.rhs.resize(n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(full.K.nonZeros());
  for (int i = 0; i < n; ++i) {
    const int row = r.free_dofs[i];
    double rhs = full.rhs[row];
    for (SparseMatrix::InnerIterator it(full.K, row); it; ++it) {
      const int col = static_cast<int>(it.col());
      if (is_fixed[col])
        rhs -= it.value() * fixed[col];
      else
        trip.emplace_back(i, r.dof_of[col], it.value());
    }
    r.rhs[i] = rhs;
  }
  r.K.resize(n, n);
  r.K.setFromTriplets(trip.begin(), trip.end());
  return r;
}

enum class SolverKind { Iterative, Direct };

struct SolveOptions {
  double tol = 1e-12;
  int max_iter = 0;  // 0: 20 * dofs
  SolverKind kind = SolverKind::Iterative;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0;  // relative
};

/// Solves a constrained system and scatters to a full coefficient vector.
/// An optional guess on the same basis seeds the iterative solvers.
inline SplineFunction solve(const SparseSystem& sys, const SolveOptions& opts = {}, SolveReport* report = nullptr,
                            const SplineFunction* guess = nullptr) {
  const auto n = sys.K.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (guess) {
    if (guess->coeffs.size() != sys.basis->size()) throw std::invalid_argument("initial guess lives on another basis");
    for (Eigen::Index i = 0; i < n; ++i) x[i] = guess->coeffs[sys.free_dofs[i]];
  }
  SolveReport rep;
  if (n > 0) {
    if (opts.kind == SolverKind::Direct) {
      Eigen::SparseMatrix<double> Kc = sys.K;
      if (sys.symmetric) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Kc);
        if (ldlt.info() != Eigen::Success) throw std::runtime_error("sparse LDLT factorization failed");
        x = ldlt.solve(sys.rhs);
      } else {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Kc);
        if (lu.info() != Eigen::Success) throw std::runtime_error("sparse LU factorization failed");
        x = lu.solve(sys.rhs);
      }
    } else {
      const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(20 * n);
      bool ok = false;
      if (sys.symmetric) {
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(opts.tol);
        cg.setMaxIterations(max_iter);
        cg.compute(sys.K);
        x = cg.solveWithGuess(sys.rhs, x);
        rep.iterations = static_cast<int>(cg.iterations());
        ok = cg.info() == Eigen::Success;
      } else {
        Eigen::BiCGSTAB<SparseMatrix> bi;
        bi.setTolerance(opts.tol);
        bi.setMaxIterations(max_iter);
        bi.compute(sys.K);
        x = bi.solveWithGuess(sys.rhs, x);
        rep.iterations = static_cast<int>(bi.iterations());
        ok = bi.info() == Eigen::Success;
      }
      const double bn = sys.rhs.norm();
      rep.residual = bn > 0 ? (sys.K * x - sys.rhs).norm() / bn : (sys.K * x).norm();
      if (!ok) {
        std::ostringstream os;
        os << "iterative solver did not converge in " << max_iter << " iterations (relative residual "
           << rep.residual << ")";
        throw std::runtime_error(os.str());
      }
    }
    if (opts.kind == SolverKind::Direct) {
      const double bn = sys.rhs.norm();
      rep.residual = bn > 0 ? (sys.K * x - sys.rhs).norm() / bn : 0.0;
    }
  }
  if (report) *report = rep;
  SplineFunction u(sys.basis);
  for (std::size_t i = 0; i < sys.free_dofs.size(); ++i) u.coeffs[sys.free_dofs[i]] = x[i];
  for (std::size_t i = 0; i < sys.constrained.size(); ++i) u.coeffs[sys.constrained[i]] = sys.constrained_values[i];
  return u;
}

/// Assemble, constrain and solve in one call.
inline SplineFunction solve_problem(std::shared_ptr<const PhtBasis> basis, const ProblemSpec& prob,
                                    const AssemblyOptions& aopts = {}, const SolveOptions& sopts = {},
                                    SolveReport* report = nullptr, const SplineFunction* guess = nullptr) {
  return solve(apply_dirichlet(assemble(std::move(basis), prob, aopts), prob), sopts, report, guess);
}

/// Coordinate text dump, one "i j value" line per stored entry.
inline void dump_matrix(std::ostream& os, const SparseMatrix& K) {
  os.precision(17);
  for (int i = 0; i < K.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(K, i); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace pht
