#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pht/bezier.hpp"
#include "pht/jet.hpp"
#include "pht/tmesh.hpp"

namespace pht {

/// Rescales a jet taken in element-local coordinates to parametric ones.
inline Jet scale_local_jet(Jet j, double w, double h) {
  j.dx /= w;
  j.dy /= h;
  j.dxx /= w * w;
  j.dxy /= w * h;
  j.dyy /= h * h;
  return j;
}

/// Cubic PHT-spline basis over a hierarchical T-mesh.
///
/// Functions are built level by level: tensor-product C1 bicubic B-splines
/// on the level-0 grid; at every level, functions overlapping a split cell
/// are re-expressed on the children and truncated (the corner ordinate block
/// of every new basis vertex is zeroed), then four tensor B-splines are added
/// per new basis vertex. Function 4*k + (slot-1) belongs to anchor k.
///
/// Storage is element-major: each active element carries the Bézier patches
/// of the functions that do not vanish on it.
class PhtBasis {
 public:
  struct Entry {
    int fn = -1;
    BezierPatch patch;
  };

  /// Level-0 basis on a pure tensor mesh.
  static PhtBasis level0(std::shared_ptr<const HierarchicalTMesh> mesh) {
    if (!mesh->splits().empty()) throw std::invalid_argument("level0 basis requires an unrefined tensor mesh");
    PhtBasis b;
    b.mesh_ = std::move(mesh);
    b.by_element_.resize(b.mesh_->elements().size());
    for (const auto& v : b.mesh_->vertices())
      if (v.level == 0) b.add_vertex_functions(v.id, 0);
    b.finalize();
    return b;
  }

  /// Full level-by-level construction for an arbitrary hierarchical mesh.
  static PhtBasis build(std::shared_ptr<const HierarchicalTMesh> mesh) {
    PhtBasis b;
    b.mesh_ = std::move(mesh);
    b.by_element_.resize(b.mesh_->elements().size());
    for (const auto& v : b.mesh_->vertices())
      if (v.level == 0) b.add_vertex_functions(v.id, 0);
    const int top = b.mesh_->max_level();
    for (int k = 0; k < top; ++k) b.refine_level(k);
    b.finalize();
    return b;
  }

  static PhtBasis build(const HierarchicalTMesh& mesh) {
    return build(std::make_shared<const HierarchicalTMesh>(mesh));
  }

  /// One truncation/extension pass. `refined` must extend this basis' mesh
  /// by splits of a single level k, with no split at level >= k before.
  PhtBasis truncate_and_extend(std::shared_ptr<const HierarchicalTMesh> refined) const {
    const auto& old_splits = mesh_->splits();
    const auto& new_splits = refined->splits();
    if (new_splits.size() <= old_splits.size() ||
        !std::equal(old_splits.begin(), old_splits.end(), new_splits.begin()))
      throw std::invalid_argument("truncate_and_extend: mesh does not extend the basis mesh");
    const int k = new_splits[old_splits.size()].level;
    for (auto it = new_splits.begin() + old_splits.size(); it != new_splits.end(); ++it)
      if (it->level != k) throw std::invalid_argument("truncate_and_extend: pass mixes refinement levels");
    for (const auto& s : old_splits)
      if (s.level >= k) throw std::invalid_argument("truncate_and_extend: mismatched mesh generations");
    PhtBasis b;
    b.mesh_ = std::move(refined);
    b.anchors_ = anchors_;
    b.by_element_ = by_element_;
    b.by_element_.resize(b.mesh_->elements().size());
    b.refine_level(k);
    b.finalize();
    return b;
  }

  const HierarchicalTMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const HierarchicalTMesh> mesh_ptr() const { return mesh_; }

  std::size_t size() const { return 4 * anchors_.size(); }
  std::size_t num_anchors() const { return anchors_.size(); }
  /// Basis vertex ids in function order.
  const std::vector<int>& anchors() const { return anchors_; }
  int anchor_of(int fn) const { return anchors_.at(fn / 4); }
  int slot_of(int fn) const { return fn % 4 + 1; }
  int index(int anchor_pos, int slot) const { return 4 * anchor_pos + slot - 1; }
  /// Position of a basis vertex in anchors(), or -1.
  int anchor_position(int vertex_id) const {
    return vertex_id < static_cast<int>(anchor_pos_.size()) ? anchor_pos_[vertex_id] : -1;
  }

  std::span<const Entry> entries(int elem) const { return by_element_.at(elem); }
  /// (element, entry index) pairs of a function's support.
  std::span<const std::pair<int, int>> support(int fn) const { return support_.at(fn); }
  const BezierPatch& patch(int fn, std::size_t piece) const {
    const auto [e, i] = support_.at(fn).at(piece);
    return by_element_[e][i].patch;
  }

  /// Jet of one basis function.
  Jet eval_function(int fn, double x, double y) const {
    const int e = mesh_->locate(x, y);
    for (const auto& en : by_element_[e])
      if (en.fn == fn) return eval_patch(e, en.patch, x, y);
    return {};
  }

  /// Jet of sum_i c_i phi_i on a given element at local coords (u, v).
  Jet eval_local(int elem, std::span<const double> coeffs, double u, double v) const {
    const Bernstein3 bu(u), bv(v);
    Jet r;
    for (const auto& en : by_element_[elem]) r += coeffs[en.fn] * en.patch.eval_local(bu, bv);
    const auto& rc = mesh_->element(elem).rect;
    return scale_local_jet(r, rc.width(), rc.height());
  }

  Jet eval(std::span<const double> coeffs, double x, double y) const {
    const int e = mesh_->locate(x, y);
    const auto& rc = mesh_->element(e).rect;
    return eval_local(e, coeffs, (x - rc.x0) / rc.width(), (y - rc.y0) / rc.height());
  }

  /// Sum of all basis functions at a point.
  double sum_at(double x, double y) const {
    const int e = mesh_->locate(x, y);
    const auto& rc = mesh_->element(e).rect;
    double s = 0;
    for (const auto& en : by_element_[e])
      s += en.patch.eval_local((x - rc.x0) / rc.width(), (y - rc.y0) / rc.height()).v;
    return s;
  }

  /// Text grid of a function's ordinates, one block per supporting element.
  void dump_function(std::ostream& os, int fn) const {
    os << "function " << fn << " anchor " << anchor_of(fn) << " slot " << slot_of(fn) << '\n';
    for (const auto& [e, i] : support_.at(fn)) {
      const auto& r = mesh_->element(e).rect;
      os << "element " << e << " [" << r.x0 << ',' << r.x1 << "]x[" << r.y0 << ',' << r.y1 << "]\n";
      const auto& p = by_element_[e][i].patch;
      for (int j = 3; j >= 0; --j) {
        for (int ii = 0; ii < 4; ++ii) os << (ii ? " " : "") << p.at(ii, j);
        os << '\n';
      }
    }
  }

 private:
  Jet eval_patch(int e, const BezierPatch& p, double x, double y) const {
    const auto& rc = mesh_->element(e).rect;
    return scale_local_jet(p.eval_local((x - rc.x0) / rc.width(), (y - rc.y0) / rc.height()), rc.width(),
                           rc.height());
  }

  /// Appends the four tensor B-splines of a basis vertex, supported on its
  /// incident cells of the vertex' own level.
  void add_vertex_functions(int vid, int level) {
    const auto& v = mesh_->vertex(vid);
    const Coord u = level_unit(level);
    const double wl = v.key.ix > 0 ? mesh_->span_x(u) : 0.0;
    const double wr = v.key.ix < mesh_->extent_x() ? mesh_->span_x(u) : 0.0;
    const double hb = v.key.iy > 0 ? mesh_->span_y(u) : 0.0;
    const double ht = v.key.iy < mesh_->extent_y() ? mesh_->span_y(u) : 0.0;
    const double lam = wl / (wl + wr);
    const double mu = hb / (hb + ht);
    // Univariate Bézier ordinates of the two C1 cubics attached to a knot:
    // [kind][side] with kind 0 = (x-1, x-1, x, x, x+1), 1 = (x-1, x, x, x+1, x+1).
    auto univariate = [](double t) {
      std::array<std::array<std::array<double, 4>, 2>, 2> f{};
      f[0][0] = {0, 0, 1, 1 - t};
      f[0][1] = {1 - t, 0, 0, 0};
      f[1][0] = {0, 0, 0, t};
      f[1][1] = {t, 1, 0, 0};
      return f;
    };
    const auto fx = univariate(lam), fy = univariate(mu);
    static constexpr std::array<std::array<int, 2>, 4> kSlotKinds{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    const int base = static_cast<int>(size());
    anchors_.push_back(vid);
    for (int sy = 0; sy < 2; ++sy) {
      for (int sx = 0; sx < 2; ++sx) {
        const int e = mesh_->quadrant_element(v.key, sx ? 1 : -1, sy ? 1 : -1, level);
        if (e < 0) continue;
        for (int s = 0; s < 4; ++s) {
          auto p = BezierPatch::tensor(fx[kSlotKinds[s][0]][sx], fy[kSlotKinds[s][1]][sy]);
          if (!p.is_zero()) by_element_[e].push_back({base + s, p});
        }
      }
    }
  }

  void refine_level(int k) {
    const auto& mesh = *mesh_;
    auto is_new_basis = [&](DyadicPoint p) {
      const int vid = mesh.find_vertex(p);
      return vid >= 0 && mesh.vertex(vid).level == k + 1 && mesh.vertex(vid).is_basis();
    };
    for (const auto& el : mesh.elements()) {
      if (el.level != k || el.active()) continue;
      std::vector<Entry> entries = std::move(by_element_[el.id]);
      by_element_[el.id].clear();
      std::array<std::array<bool, 4>, 4> zero{};
      for (int c = 0; c < 4; ++c) {
        const auto& ch = mesh.element(el.children[c]);
        for (int cy = 0; cy < 2; ++cy)
          for (int cx = 0; cx < 2; ++cx) zero[c][cx + 2 * cy] = is_new_basis(ch.corner(cx, cy));
      }
      for (const auto& en : entries) {
        auto kids = en.patch.split();
        for (int c = 0; c < 4; ++c) {
          for (int q = 0; q < 4; ++q)
            if (zero[c][q]) kids[c].zero_corner_block(q % 2, q / 2);
          if (!kids[c].is_zero()) by_element_[el.children[c]].push_back({en.fn, kids[c]});
        }
      }
    }
    for (const auto& v : mesh.vertices())
      if (v.level == k + 1 && v.is_basis()) add_vertex_functions(v.id, k + 1);
  }

  void finalize() {
    support_.assign(size(), {});
    for (std::size_t e = 0; e < by_element_.size(); ++e) {
      if (by_element_[e].empty()) continue;
      if (!mesh_->element(static_cast<int>(e)).active())
        throw std::logic_error("basis has patches on an inactive element");
      for (std::size_t i = 0; i < by_element_[e].size(); ++i)
        support_[by_element_[e][i].fn].emplace_back(static_cast<int>(e), static_cast<int>(i));
    }
    for (std::size_t f = 0; f < support_.size(); ++f)
      if (support_[f].empty())
        throw std::logic_error("truncation annihilated basis function " + std::to_string(f));
    anchor_pos_.assign(mesh_->vertices().size(), -1);
    for (std::size_t i = 0; i < anchors_.size(); ++i) anchor_pos_[anchors_[i]] = static_cast<int>(i);
  }

  std::shared_ptr<const HierarchicalTMesh> mesh_;
  std::vector<int> anchors_;
  std::vector<int> anchor_pos_;
  std::vector<std::vector<Entry>> by_element_;
  std::vector<std::vector<std::pair<int, int>>> support_;
};

inline std::shared_ptr<const PhtBasis> make_basis(const HierarchicalTMesh& mesh) {
  return std::make_shared<const PhtBasis>(PhtBasis::build(mesh));
}

/// Coefficient vector over a PhtBasis.
struct SplineFunction {
  std::shared_ptr<const PhtBasis> basis;
  std::vector<double> coeffs;

  SplineFunction() = default;
  explicit SplineFunction(std::shared_ptr<const PhtBasis> b)
      : basis(std::move(b)), coeffs(basis->size(), 0.0) {}
  SplineFunction(std::shared_ptr<const PhtBasis> b, std::vector<double> c)
      : basis(std::move(b)), coeffs(std::move(c)) {
    if (coeffs.size() != basis->size()) throw std::invalid_argument("coefficient length differs from basis size");
  }

  Jet eval(double x, double y) const { return basis->eval(coeffs, x, y); }
  Jet eval_local(int elem, double u, double v) const { return basis->eval_local(elem, coeffs, u, v); }
};

}  // namespace pht
