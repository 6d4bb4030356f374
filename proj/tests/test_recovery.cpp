#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "pht/norms.hpp"
#include "pht/recovery.hpp"
#include "test_support.hpp"

using namespace pht;

namespace {

/// Bivariate polynomial sum c(i,j) x^i y^j with exact partial derivatives.
struct Poly {
  Eigen::MatrixXd c;

  double d(double x, double y, int px, int py) const {
    double s = 0;
    for (int i = px; i < c.rows(); ++i)
      for (int j = py; j < c.cols(); ++j) {
        if (c(i, j) == 0) continue;
        double f = c(i, j);
        for (int k = 0; k < px; ++k) f *= i - k;
        for (int k = 0; k < py; ++k) f *= j - k;
        s += f * std::pow(x, i - px) * std::pow(y, j - py);
      }
    return s;
  }
};

Poly random_quartic(std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  Poly p{Eigen::MatrixXd::Zero(5, 5)};
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; i + j <= 4; ++j) p.c(i, j) = U(rng);
  return p;
}

int vertex_at(const HierarchicalTMesh& m, int i, int j) {
  return m.find_vertex({i * level_unit(0), j * level_unit(0)});
}

Jet sin_sin(const Jet& x, const Jet& y) {
  const double pi = std::numbers::pi;
  return sin(pi * x) * sin(pi * y);
}

}  // namespace

TEST(Recovery, QuarticMonomialOrder) {
  const auto m = quartic_monomials(2, 3);
  const double expect[15] = {1, 2, 3, 4, 6, 9, 8, 12, 18, 27, 16, 24, 36, 54, 81};
  for (int k = 0; k < 15; ++k) EXPECT_EQ(m[k], expect[k]);
}

TEST(Recovery, InteriorVertexOneRing) {
  const auto mesh = HierarchicalTMesh::tensor(8, 8);
  const auto p = build_patch(mesh, vertex_at(mesh, 4, 4));
  EXPECT_EQ(p.rings, 1);
  EXPECT_EQ(p.elements.size(), 4u);
  EXPECT_EQ(p.samples.size(), 29u);  // 9 vertices + 4 * (center + 4 Gauss points)
  EXPECT_NEAR(p.h, std::sqrt(2.0) * 0.25, 1e-15);
  for (std::size_t i = 1; i < p.samples.size(); ++i) {
    const auto &a = p.samples[i - 1], &b = p.samples[i];
    EXPECT_TRUE(a.dy < b.dy || (a.dy == b.dy && a.dx < b.dx));
  }
}

TEST(Recovery, CornerVertexNeedsTwoRings) {
  const auto mesh = HierarchicalTMesh::tensor(8, 8);
  const auto p = build_patch(mesh, vertex_at(mesh, 0, 0));
  EXPECT_EQ(p.rings, 2);
  EXPECT_EQ(p.elements.size(), 4u);
  EXPECT_EQ(p.samples.size(), 29u);
  for (const auto& s : p.samples) {
    EXPECT_GE(s.dx, 0);
    EXPECT_GE(s.dy, 0);
  }
}

TEST(Recovery, VerticesOnlyPolicy) {
  const auto mesh = HierarchicalTMesh::tensor(8, 8);
  const auto p = build_patch(mesh, vertex_at(mesh, 4, 4), SamplingPolicy::VerticesOnly);
  EXPECT_EQ(p.rings, 2);
  EXPECT_EQ(p.elements.size(), 16u);
  EXPECT_EQ(p.samples.size(), 25u);
  EXPECT_NEAR(p.h, std::sqrt(2.0) * 0.5, 1e-15);
}

TEST(Recovery, RejectsTJunction) {
  auto mesh = HierarchicalTMesh::tensor(2, 2);
  mesh.refine_one(0);
  int tj = -1;
  for (const auto& v : mesh.vertices())
    if (v.kind == VertexKind::TJunction) tj = v.id;
  ASSERT_GE(tj, 0);
  EXPECT_THROW(build_patch(mesh, tj), std::invalid_argument);
}

TEST(Recovery, SingleCellCannotDetermineQuartic) {
  const auto mesh = HierarchicalTMesh::tensor(1, 1);
  EXPECT_THROW(build_patch(mesh, 0, SamplingPolicy::VerticesOnly), std::runtime_error);
}

TEST(Recovery, StencilPreservesQuartics) {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 4; ++trial) {
    const auto mesh = oracle::random_mesh(rng);
    const Poly q = random_quartic(rng);
    for (auto policy : {SamplingPolicy::Enriched, SamplingPolicy::VerticesOnly})
      for (int vid : mesh.basis_vertices()) {
        const auto st = recovery_stencil(mesh, vid, policy);
        const auto& z = mesh.vertex(vid);
        Eigen::VectorXd vals(st.patch.samples.size());
        for (std::size_t i = 0; i < st.patch.samples.size(); ++i)
          vals[i] = q.d(z.x + st.patch.samples[i].dx, z.y + st.patch.samples[i].dy, 0, 0);
        const Eigen::Matrix<double, 8, 1> got = st.weights * vals;
        const double expect[8] = {q.d(z.x, z.y, 1, 0), q.d(z.x, z.y, 2, 0), q.d(z.x, z.y, 1, 1), q.d(z.x, z.y, 2, 1),
                                  q.d(z.x, z.y, 0, 1), q.d(z.x, z.y, 1, 1), q.d(z.x, z.y, 0, 2), q.d(z.x, z.y, 1, 2)};
        for (int r = 0; r < 8; ++r) EXPECT_NEAR(got[r], expect[r], 1e-8 * std::max(1.0, std::abs(expect[r])));
      }
  }
}

TEST(Recovery, FitAndStencilAgree) {
  std::mt19937 rng(22);
  const auto mesh = oracle::random_mesh(rng);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int vid : mesh.basis_vertices()) {
    const auto st = recovery_stencil(mesh, vid);
    Eigen::VectorXd vals(st.patch.samples.size());
    for (auto& v : vals) v = U(rng);
    const auto jets = recovered_jets(fit_quartic(st.patch, vals), st.patch.h);
    const Eigen::Matrix<double, 8, 1> w = st.weights * vals;
    for (int r = 0; r < 4; ++r) {
      EXPECT_NEAR(w[r], jets[0].vec()[r], 1e-8 * std::max(1.0, std::abs(w[r])));
      EXPECT_NEAR(w[4 + r], jets[1].vec()[r], 1e-8 * std::max(1.0, std::abs(w[4 + r])));
    }
  }
}

TEST(Recovery, StencilRowsAnnihilateConstants) {
  std::mt19937 rng(23);
  const auto mesh = oracle::random_mesh(rng);
  for (int vid : mesh.basis_vertices()) {
    const auto st = recovery_stencil(mesh, vid);
    const auto sums = st.weights.rowwise().sum();
    const double scale = st.weights.cwiseAbs().maxCoeff();
    EXPECT_LT(sums.cwiseAbs().maxCoeff(), 1e-10 * scale);
  }
}

TEST(Recovery, StencilTranslationInvariance) {
  const auto mesh = HierarchicalTMesh::tensor(16, 16);
  const auto ref = recovery_stencil(mesh, vertex_at(mesh, 5, 6));
  for (auto [i, j] : {std::pair{6, 6}, {9, 3}, {12, 12}, {3, 11}}) {
    const auto st = recovery_stencil(mesh, vertex_at(mesh, i, j));
    ASSERT_EQ(st.weights.cols(), ref.weights.cols());
    EXPECT_LT((st.weights - ref.weights).cwiseAbs().maxCoeff(), 1e-12);
  }
  // boundary-adjacent patches differ in shape but translate along the edge
  const auto b1 = recovery_stencil(mesh, vertex_at(mesh, 4, 0));
  const auto b2 = recovery_stencil(mesh, vertex_at(mesh, 9, 0));
  EXPECT_LT((b1.weights - b2.weights).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Recovery, GradientOfInterpolatedQuarticIsExact) {
  std::mt19937 rng(24);
  const auto mesh = oracle::random_mesh(rng);
  auto basis = make_basis(mesh);
  // a quartic that the bicubic space also contains
  const ScalarField u = [](const Jet& x, const Jet& y) { return x * x * x * y + x * y * y - 2.0 * y * y * y + x; };
  const auto uh = InterpolationOperator(basis).interpolate_function(u);
  const auto g = recover(uh);
  for (double s : {0.1, 0.37, 0.5, 0.81})
    for (double t : {0.05, 0.42, 0.93}) {
      const Jet ex = u(Jet::var_x(s), Jet::var_y(t));
      EXPECT_NEAR(g.parametric(s, t).x(), ex.dx, 1e-9);
      EXPECT_NEAR(g.parametric(s, t).y(), ex.dy, 1e-9);
    }
}

TEST(Recovery, BoundedByEnergy) {
  std::mt19937 rng(25);
  for (int k = 0; k < 3; ++k) {
    auto basis = make_basis(oracle::random_mesh(rng));
    SplineFunction uh(basis);
    std::uniform_real_distribution<double> U(-1, 1);
    for (auto& c : uh.coeffs) c = U(rng);
    const auto g = recover(uh);
    EXPECT_LT(recovered_l2(uh, g), 50 * h1_seminorm(uh, GeometryMap::identity()));
  }
}

TEST(Recovery, ConsistencyOrderOnInterpolant) {
  std::vector<double> err;
  for (int n : {8, 16, 32}) {
    auto basis = make_basis(HierarchicalTMesh::tensor(n, n));
    const auto uh = InterpolationOperator(basis).interpolate_function(sin_sin);
    const auto g = recover(uh);
    std::vector<int> region;
    for (int e : basis->mesh().active_elements()) {
      const auto& r = basis->mesh().element(e).rect;
      if (r.x0 >= 0.125 && r.y0 >= 0.125 && r.x1 <= 0.875 && r.y1 <= 0.875) region.push_back(e);
    }
    err.push_back(error_norms(sin_sin, uh, &g, GeometryMap::identity(), region).err_rec);
  }
  EXPECT_GT(std::log2(err[1] / err[2]), 3.5);
  EXPECT_GT(std::log2(err[0] / err[1]), 3.5);
}

TEST(Recovery, ParallelRecoveryIsDeterministic) {
  std::mt19937 rng(26);
  auto basis = make_basis(oracle::random_mesh(rng));
  const auto uh = InterpolationOperator(basis).interpolate_function(sin_sin);
  const auto a = recover(uh, GeometryMap::identity(), {SamplingPolicy::Enriched, 1});
  const auto b = recover(uh, GeometryMap::identity(), {SamplingPolicy::Enriched, 3});
  EXPECT_EQ(a.gx.coeffs, b.gx.coeffs);
  EXPECT_EQ(a.gy.coeffs, b.gy.coeffs);
}

TEST(Recovery, PhysicalGradientOnMappedDomain) {
  const auto geo = GeometryMap::polar_annulus();
  auto basis = make_basis(HierarchicalTMesh::tensor(16, 16));
  // u(x, y) = x^2 + y: pull back, interpolate, recover, push forward
  const ScalarField u = [](const Jet& x, const Jet& y) { return x * x + y; };
  const auto uh = InterpolationOperator(basis).interpolate_function(
      [&](const Jet& s, const Jet& t) { return geo.pull_back(u, s.v, t.v); });
  const auto g = recover(uh, geo);
  for (double s : {0.3, 0.5, 0.7})
    for (double t : {0.3, 0.6}) {
      const auto p = geo.map(s, t);
      // the pulled-back field is not polynomial: O(h^4) recovery error remains
      EXPECT_NEAR(g.physical(s, t).x(), 2 * p.x(), 1e-4);
      EXPECT_NEAR(g.physical(s, t).y(), 1.0, 1e-4);
    }
}

TEST(Recovery, ExportCsv) {
  auto basis = make_basis(HierarchicalTMesh::tensor(4, 4));
  const auto uh = InterpolationOperator(basis).interpolate_function(
      [](const Jet& x, const Jet& y) { return 2.0 * x - y; });
  std::ostringstream os;
  export_gradient_csv(os, recover(uh), 3);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "x,y,gx,gy");
  int rows = 0;
  while (std::getline(is, line)) {
    double x, y, gx, gy;
    char c;
    std::istringstream ls(line);
    ls >> x >> c >> y >> c >> gx >> c >> gy;
    EXPECT_NEAR(gx, 2, 1e-10);
    EXPECT_NEAR(gy, -1, 1e-10);
    ++rows;
  }
  EXPECT_EQ(rows, 16);
}
