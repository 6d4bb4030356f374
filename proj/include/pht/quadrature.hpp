#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "pht/tmesh.hpp"

namespace pht {

struct GaussRule {
  std::vector<double> nodes;    // on [0, 1]
  std::vector<double> weights;  // sum to 1
};

/// Gauss–Legendre rule on [0,1] via the Golub–Welsch eigenproblem.
inline GaussRule compute_gauss_rule(int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussRule r;
  for (int i = 0; i < order; ++i) {
    const double x = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    r.nodes.push_back(0.5 * (x + 1.0));
    r.weights.push_back(v0 * v0);
  }
  // Enforce the symmetry of the rule exactly.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (r.nodes[j] - r.nodes[i]);
    const double w = 0.5 * (r.weights[i] + r.weights[j]);
    r.nodes[i] = 0.5 - x;
    r.nodes[j] = 0.5 + x;
    r.weights[i] = r.weights[j] = w;
  }
  if (order % 2) r.nodes[order / 2] = 0.5;
  return r;
}

/// Cached rule; thread-safe.
inline const GaussRule& gauss_rule(int order) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_gauss_rule(order)).first;
  return it->second;
}

struct QuadPoint {
  double u = 0, v = 0;  // element-local coordinates in [0,1]^2
  double x = 0, y = 0;  // parametric coordinates
  double w = 0;         // weight scaled by the element area
};

/// Tensor Gauss–Legendre points on a rectangle, x fastest.
inline std::vector<QuadPoint> quadrature_points(const ParamRect& r, int order) {
  const auto& g = gauss_rule(order);
  std::vector<QuadPoint> out;
  out.reserve(order * order);
  for (int j = 0; j < order; ++j)
    for (int i = 0; i < order; ++i) {
      const double u = g.nodes[i], v = g.nodes[j];
      out.push_back({u, v, r.x0 + u * r.width(), r.y0 + v * r.height(), g.weights[i] * g.weights[j] * r.area()});
    }
  return out;
}

}  // namespace pht
