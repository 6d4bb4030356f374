#pragma once

#include <array>
#include <cmath>

#include "pht/jet.hpp"

namespace pht {

/// Cubic Bernstein polynomials and their first two derivatives at t in [0,1].
struct Bernstein3 {
  std::array<double, 4> b{};
  std::array<double, 4> d1{};
  std::array<double, 4> d2{};

  explicit Bernstein3(double t) {
    const double s = 1.0 - t;
    b = {s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t};
    d1 = {-3.0 * s * s, 3.0 * s * (s - 2.0 * t), 3.0 * t * (2.0 * s - t), 3.0 * t * t};
    d2 = {6.0 * s, 6.0 * (3.0 * t - 2.0), 6.0 * (1.0 - 3.0 * t), 6.0 * t};
  }
};

/// Bicubic Bernstein (Bézier) piece over one element.
///
/// Ordinates are stored x-fastest: `at(i, j)` is the coefficient of
/// B_i(u) B_j(v) where u runs along x and v along y on the element's local
/// square [0,1]^2. The 16 ordinates split into four 2x2 corner blocks, block
/// (cx, cy) holding the ordinates nearest corner (cx, cy).
struct BezierPatch {
  std::array<double, 16> ord{};

  double& at(int i, int j) { return ord[i + 4 * j]; }
  double at(int i, int j) const { return ord[i + 4 * j]; }

  static BezierPatch tensor(const std::array<double, 4>& xs, const std::array<double, 4>& ys) {
    BezierPatch p;
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) p.at(i, j) = xs[i] * ys[j];
    return p;
  }

  /// Jet with respect to local coordinates (u, v) on [0,1]^2.
  Jet eval_local(double u, double v) const { return eval_local(Bernstein3(u), Bernstein3(v)); }

  Jet eval_local(const Bernstein3& bu, const Bernstein3& bv) const {
    Jet r;
    for (int j = 0; j < 4; ++j) {
      double s0 = 0, s1 = 0, s2 = 0;
      for (int i = 0; i < 4; ++i) {
        const double c = at(i, j);
        s0 += c * bu.b[i];
        s1 += c * bu.d1[i];
        s2 += c * bu.d2[i];
      }
      r.v += s0 * bv.b[j];
      r.dx += s1 * bv.b[j];
      r.dy += s0 * bv.d1[j];
      r.dxx += s2 * bv.b[j];
      r.dxy += s1 * bv.d1[j];
      r.dyy += s0 * bv.d2[j];
    }
    return r;
  }

  void zero_corner_block(int cx, int cy) {
    for (int j = 2 * cy; j < 2 * cy + 2; ++j)
      for (int i = 2 * cx; i < 2 * cx + 2; ++i) at(i, j) = 0.0;
  }

  bool is_zero() const {
    for (double c : ord)
      if (c != 0.0) return false;
    return true;
  }

  /// de Casteljau subdivision at the midpoints. Children are ordered
  /// SW, SE, NW, NE (index = cx + 2*cy).
  std::array<BezierPatch, 4> split() const {
    auto halve = [](const std::array<double, 4>& c, std::array<double, 4>& lo,
                    std::array<double, 4>& hi) {
      const double m01 = 0.5 * (c[0] + c[1]);
      const double m12 = 0.5 * (c[1] + c[2]);
      const double m23 = 0.5 * (c[2] + c[3]);
      const double m012 = 0.5 * (m01 + m12);
      const double m123 = 0.5 * (m12 + m23);
      const double mid = 0.5 * (m012 + m123);
      lo = {c[0], m01, m012, mid};
      hi = {mid, m123, m23, c[3]};
    };
    // Split along x, row by row.
    std::array<BezierPatch, 2> xhalf;
    for (int j = 0; j < 4; ++j) {
      std::array<double, 4> row{at(0, j), at(1, j), at(2, j), at(3, j)}, lo, hi;
      halve(row, lo, hi);
      for (int i = 0; i < 4; ++i) {
        xhalf[0].at(i, j) = lo[i];
        xhalf[1].at(i, j) = hi[i];
      }
    }
    std::array<BezierPatch, 4> out;
    for (int cx = 0; cx < 2; ++cx) {
      for (int i = 0; i < 4; ++i) {
        std::array<double, 4> col{xhalf[cx].at(i, 0), xhalf[cx].at(i, 1), xhalf[cx].at(i, 2),
                                  xhalf[cx].at(i, 3)},
            lo, hi;
        halve(col, lo, hi);
        for (int j = 0; j < 4; ++j) {
          out[cx].at(i, j) = lo[j];
          out[cx + 2].at(i, j) = hi[j];
        }
      }
    }
    return out;
  }
};

/// Convenience alias for the split operation.
inline std::array<BezierPatch, 4> bezier_split(const BezierPatch& p) { return p.split(); }

}  // namespace pht
