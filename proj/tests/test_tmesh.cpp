#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "pht/tmesh.hpp"
#include "test_support.hpp"

using namespace pht;

namespace {

int vertex_at(const HierarchicalTMesh& m, double x, double y) {
  for (const auto& v : m.vertices())
    if (v.x == x && v.y == y) return v.id;
  return -1;
}

VertexKind kind_at(const HierarchicalTMesh& m, double x, double y) {
  const int id = vertex_at(m, x, y);
  EXPECT_GE(id, 0) << "no vertex at (" << x << ", " << y << ")";
  return m.vertex(id).kind;
}

}  // namespace

TEST(TMesh, SingleCell) {
  auto m = HierarchicalTMesh::tensor(1, 1);
  EXPECT_EQ(m.num_active(), 1);
  EXPECT_EQ(m.vertices().size(), 4u);
  EXPECT_EQ(m.count_kind(VertexKind::Boundary), 4);
  EXPECT_EQ(m.count_kind(VertexKind::InteriorCrossing), 0);
  EXPECT_EQ(m.dimension(), 16);
}

TEST(TMesh, TensorCounts) {
  auto m2 = HierarchicalTMesh::tensor(2, 2);
  EXPECT_EQ(m2.num_active(), 4);
  EXPECT_EQ(m2.count_kind(VertexKind::Boundary), 8);
  EXPECT_EQ(m2.count_kind(VertexKind::InteriorCrossing), 1);
  EXPECT_EQ(m2.dimension(), 36);

  auto m4 = HierarchicalTMesh::tensor(4, 4);
  EXPECT_EQ(m4.vertices().size(), 25u);
  EXPECT_EQ(m4.count_kind(VertexKind::Boundary), 16);
  EXPECT_EQ(m4.count_kind(VertexKind::InteriorCrossing), 9);
}

TEST(TMesh, ZeroCountsRejected) {
  EXPECT_THROW(HierarchicalTMesh::tensor(0, 3), std::invalid_argument);
  EXPECT_THROW(HierarchicalTMesh::tensor(2, 0), std::invalid_argument);
}

TEST(TMesh, CornerRefinementClassification) {
  auto m = HierarchicalTMesh::tensor(2, 2);
  m.refine_one(m.locate(0.1, 0.1));
  EXPECT_EQ(kind_at(m, 0.25, 0.25), VertexKind::InteriorCrossing);
  EXPECT_EQ(kind_at(m, 0.25, 0.0), VertexKind::Boundary);
  EXPECT_EQ(kind_at(m, 0.0, 0.25), VertexKind::Boundary);
  EXPECT_EQ(kind_at(m, 0.5, 0.25), VertexKind::TJunction);
  EXPECT_EQ(kind_at(m, 0.25, 0.5), VertexKind::TJunction);
  EXPECT_EQ(m.count_kind(VertexKind::Boundary), 10);
  EXPECT_EQ(m.count_kind(VertexKind::InteriorCrossing), 2);
  EXPECT_EQ(m.dimension(), 48);
}

TEST(TMesh, UniformRefinementMatchesFinerTensor) {
  auto m = HierarchicalTMesh::tensor(2, 2);
  m.refine(m.active_elements());
  auto fine = HierarchicalTMesh::tensor(4, 4);
  ASSERT_EQ(m.vertices().size(), fine.vertices().size());
  for (const auto& v : fine.vertices()) {
    const int id = vertex_at(m, v.x, v.y);
    ASSERT_GE(id, 0);
    EXPECT_EQ(m.vertex(id).kind, v.kind);
  }
  EXPECT_EQ(m.dimension(), fine.dimension());
}

TEST(TMesh, TJunctionPromotedBySecondSplit) {
  auto m = HierarchicalTMesh::tensor(2, 2);
  m.refine_one(m.locate(0.1, 0.1));
  EXPECT_EQ(kind_at(m, 0.5, 0.25), VertexKind::TJunction);
  m.refine_one(m.locate(0.9, 0.1));
  EXPECT_EQ(kind_at(m, 0.5, 0.25), VertexKind::InteriorCrossing);
}

TEST(TMesh, RefiningInactiveRejected) {
  auto m = HierarchicalTMesh::tensor(2, 2);
  const int e = m.locate(0.1, 0.1);
  m.refine_one(e);
  EXPECT_THROW(m.refine_one(e), std::invalid_argument);
  EXPECT_NO_THROW(m.refine_one(m.locate(0.1, 0.1)));
  EXPECT_EQ(m.element(m.locate(0.1, 0.1)).level, 2);
}

TEST(TMesh, Locate) {
  auto m = HierarchicalTMesh::tensor(2, 2);
  auto rect = [&](int id) { return m.element(id).rect; };
  EXPECT_EQ(rect(m.locate(0.1, 0.1)).x1, 0.5);
  const auto tie = rect(m.locate(0.5, 0.5));
  EXPECT_EQ(tie.x0, 0.0);
  EXPECT_EQ(tie.y0, 0.0);
  m.refine_one(m.locate(0.1, 0.1));
  const auto c = rect(m.locate(0.3, 0.3));
  EXPECT_EQ(c.x0, 0.25);
  EXPECT_EQ(c.x1, 0.5);
  EXPECT_EQ(c.y0, 0.25);
  EXPECT_EQ(c.y1, 0.5);
  EXPECT_THROW(m.locate(1.5, 0.2), std::out_of_range);
  EXPECT_THROW(m.locate(0.5, -1e-3), std::out_of_range);
}

TEST(TMesh, LocateTieBreakAtTJunction) {
  // Big element above-left of (0.5, 0.25) has the smaller x0 tie.
  auto m = HierarchicalTMesh::tensor(2, 2);
  m.refine_one(m.locate(0.9, 0.1));
  const auto r = m.element(m.locate(0.5, 0.25)).rect;
  EXPECT_EQ(r.x0, 0.0);
  EXPECT_EQ(r.y0, 0.0);
}

TEST(TMesh, Layers) {
  auto m = HierarchicalTMesh::tensor(8, 8);
  const int z = vertex_at(m, 0.5, 0.5);
  EXPECT_EQ(m.layer(z, 0).size(), 0u);
  EXPECT_EQ(m.layer(z, 1).size(), 4u);
  EXPECT_EQ(m.layer(z, 2).size(), 16u);
  EXPECT_EQ(m.layer(z, 3).size(), 36u);
  EXPECT_EQ(m.layer(vertex_at(m, 0.0, 0.0), 1).size(), 1u);
  EXPECT_EQ(m.layer(vertex_at(m, 0.0, 0.0), 2).size(), 4u);
}

TEST(TMesh, LayerMonotoneOnRandomMeshes) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    auto m = oracle::random_mesh(rng);
    for (int z : m.basis_vertices()) {
      auto prev = m.layer(z, 1);
      for (int n = 2; n <= 3; ++n) {
        auto cur = m.layer(z, n);
        EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
        prev = std::move(cur);
      }
    }
  }
}

TEST(TMesh, AreaConservationAndClassificationIdempotence) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = oracle::random_mesh(rng, 4, 4, 4);
    double area = 0;
    for (int e : m.active_elements()) area += m.element(e).rect.area();
    EXPECT_NEAR(area, m.domain().area(), 1e-12);
    for (const auto& v : m.vertices()) {
      EXPECT_EQ(m.classify(v.key), v.kind);
      EXPECT_EQ(oracle::brute_force_kind(m, v.key), v.kind);
    }
    const int vb = m.count_kind(VertexKind::Boundary), vp = m.count_kind(VertexKind::InteriorCrossing);
    EXPECT_EQ(m.dimension(), 4 * (vb + vp));
  }
}

TEST(TMesh, LevelSizes) {
  std::mt19937 rng(3);
  auto m = oracle::random_mesh(rng, 3, 3, 3);
  for (int e : m.active_elements()) {
    const auto& el = m.element(e);
    EXPECT_NEAR(el.rect.width(), m.h0x() * std::ldexp(1.0, -el.level), 1e-15);
    EXPECT_EQ(el.size(), level_unit(el.level));
  }
}

TEST(TMesh, DumpLoadReplayIsExact) {
  std::mt19937 rng(5);
  auto m = oracle::random_mesh(rng, 3, 4, 4);
  std::stringstream ss;
  m.dump(ss);
  const std::string first = ss.str();
  auto back = HierarchicalTMesh::load(ss);
  std::stringstream again;
  back.dump(again);
  EXPECT_EQ(first, again.str());
  ASSERT_EQ(back.elements().size(), m.elements().size());
  for (std::size_t i = 0; i < m.elements().size(); ++i) {
    EXPECT_EQ(back.elements()[i].lo, m.elements()[i].lo);
    EXPECT_EQ(back.elements()[i].active(), m.elements()[i].active());
  }
}

TEST(TMesh, LoadRejectsMalformed) {
  std::stringstream bad("2 2 0 1");
  EXPECT_THROW(HierarchicalTMesh::load(bad), std::runtime_error);
  std::stringstream missing("2 2 0 1 0 1\n1 0\n");
  EXPECT_THROW(HierarchicalTMesh::load(missing), std::invalid_argument);
}

TEST(TMesh, GradingKeepsOneIrregular) {
  auto m = HierarchicalTMesh::tensor(4, 4);
  for (int i = 0; i < 4; ++i) m.refine_one(m.locate(0.01, 0.01), {.grade = true});
  for (int e : m.active_elements())
    for (int nb : m.neighbors_touching(e)) EXPECT_LE(std::abs(m.element(e).level - m.element(nb).level), 1);
}
