#include <gtest/gtest.h>

#include <cmath>

#include "pht/quadrature.hpp"

using namespace pht;

TEST(Gauss, TwoPointNodes) {
  const auto& r = gauss_rule(2);
  const double g = 0.5 / std::sqrt(3.0);
  EXPECT_NEAR(r.nodes[0], 0.5 - g, 1e-15);
  EXPECT_NEAR(r.nodes[1], 0.5 + g, 1e-15);
  EXPECT_NEAR(r.weights[0], 0.5, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.5, 1e-15);
}

TEST(Gauss, ExactForDegreeUpTo2nMinus1) {
  for (int n = 1; n <= 12; ++n) {
    const auto& r = gauss_rule(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
      EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14) << "n=" << n << " k=" << k;
    }
    if (n > 5) continue;  // the defect drops below round-off for higher orders
    // one degree more is not integrated exactly
    double s = 0;
    for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], 2 * n);
    EXPECT_GT(std::abs(s - 1.0 / (2 * n + 1)), 1e-8) << "n=" << n;
  }
}

TEST(Gauss, SymmetricAndSorted) {
  for (int n = 1; n <= 10; ++n) {
    const auto& r = gauss_rule(n);
    for (int i = 0; i < n; ++i) {
      EXPECT_DOUBLE_EQ(r.nodes[i] + r.nodes[n - 1 - i], 1.0);
      EXPECT_DOUBLE_EQ(r.weights[i], r.weights[n - 1 - i]);
      EXPECT_GT(r.weights[i], 0.0);
      if (i) EXPECT_LT(r.nodes[i - 1], r.nodes[i]);
    }
  }
}

TEST(Gauss, RejectsNonPositiveOrder) { EXPECT_THROW(gauss_rule(0), std::invalid_argument); }

TEST(Gauss, TensorPointsOnRectangle) {
  const ParamRect r{0.25, 0.75, 0.5, 1.0};
  const auto pts = quadrature_points(r, 3);
  ASSERT_EQ(pts.size(), 9u);
  double area = 0, mx = 0, mxy2 = 0;
  for (const auto& q : pts) {
    EXPECT_TRUE(r.contains(q.x, q.y));
    EXPECT_NEAR(q.x, r.x0 + q.u * r.width(), 1e-15);
    EXPECT_NEAR(q.y, r.y0 + q.v * r.height(), 1e-15);
    area += q.w;
    mx += q.w * q.x;
    mxy2 += q.w * q.x * q.y * q.y;
  }
  EXPECT_NEAR(area, r.area(), 1e-15);
  EXPECT_NEAR(mx, 0.5 * (0.75 * 0.75 - 0.25 * 0.25) * 0.5, 1e-15);
  EXPECT_NEAR(mxy2, 0.5 * (0.75 * 0.75 - 0.25 * 0.25) * (1.0 - 0.125) / 3, 1e-15);
  // x runs fastest
  EXPECT_EQ(pts[0].y, pts[1].y);
  EXPECT_LT(pts[0].x, pts[1].x);
}
