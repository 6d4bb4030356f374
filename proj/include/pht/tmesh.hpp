#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pht {

struct ParamRect {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool valid() const { return x0 < x1 && y0 < y1; }
};

enum class VertexKind { Boundary, InteriorCrossing, TJunction };

/// Number of dyadic subdivisions representable below level 0. Vertex and
/// element positions are stored as integers in units of h0 * 2^-kMaxLevel so
/// coincident points produced by different splits compare exactly.
inline constexpr int kMaxLevel = 30;

using Coord = std::int64_t;

inline constexpr Coord level_unit(int level) { return Coord{1} << (kMaxLevel - level); }

struct DyadicPoint {
  Coord ix = 0;
  Coord iy = 0;
  friend bool operator==(const DyadicPoint&, const DyadicPoint&) = default;
};

struct DyadicPointHash {
  std::size_t operator()(const DyadicPoint& p) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(p.ix) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(p.iy) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

/// Coarsest level whose grid contains the coordinate.
inline int dyadic_level(Coord c) {
  if (c == 0) return 0;
  int tz = 0;
  while (((c >> tz) & 1) == 0) ++tz;
  return std::max(0, kMaxLevel - tz);
}

struct MeshVertex {
  int id = -1;
  DyadicPoint key;
  double x = 0.0, y = 0.0;
  int level = 0;
  VertexKind kind = VertexKind::TJunction;

  bool is_basis() const { return kind != VertexKind::TJunction; }
};

struct MeshElement {
  int id = -1;
  int level = 0;
  DyadicPoint lo;  // lower-left corner
  ParamRect rect;
  int parent = -1;
  std::array<int, 4> children{-1, -1, -1, -1};  // SW, SE, NW, NE

  bool active() const { return children[0] < 0; }
  Coord size() const { return level_unit(level); }
  DyadicPoint corner(int cx, int cy) const {
    return {lo.ix + cx * size(), lo.iy + cy * size()};
  }
};

struct RefineOptions {
  /// Enforce 1-irregularity by splitting coarser neighbours first.
  bool grade = false;
};

/// Hierarchical T-mesh: a forest of quadtrees over an nx x ny tensor grid.
///
/// Element ids and vertex ids are dense and stable; refinement only appends.
class HierarchicalTMesh {
 public:
  struct Split {
    int level = 0;
    std::int64_t cell = 0;  // row-major index in the level's uniform grid
    friend bool operator==(const Split&, const Split&) = default;
  };

  static HierarchicalTMesh tensor(int nx, int ny, ParamRect domain = {}) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("tensor mesh needs nx >= 1 and ny >= 1");
    if (!domain.valid()) throw std::invalid_argument("tensor mesh domain must have x0 < x1, y0 < y1");
    HierarchicalTMesh m;
    m.nx_ = nx;
    m.ny_ = ny;
    m.domain_ = domain;
    const Coord u0 = level_unit(0);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        MeshElement e;
        e.id = static_cast<int>(m.elements_.size());
        e.level = 0;
        e.lo = {i * u0, j * u0};
        e.rect = m.rect_of(e.lo, 0);
        m.elements_.push_back(e);
      }
    }
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) m.ensure_vertex({i * u0, j * u0});
    for (auto& v : m.vertices_) v.kind = m.classify(v.key);
    m.num_active_ = nx * ny;
    return m;
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const ParamRect& domain() const { return domain_; }
  double h0x() const { return domain_.width() / nx_; }
  double h0y() const { return domain_.height() / ny_; }
  Coord extent_x() const { return nx_ * level_unit(0); }
  Coord extent_y() const { return ny_ * level_unit(0); }

  const std::vector<MeshElement>& elements() const { return elements_; }
  const MeshElement& element(int id) const { return elements_.at(id); }
  const std::vector<MeshVertex>& vertices() const { return vertices_; }
  const MeshVertex& vertex(int id) const { return vertices_.at(id); }
  const std::vector<Split>& splits() const { return splits_; }
  int num_active() const { return num_active_; }

  int max_level() const {
    int l = 0;
    for (const auto& e : elements_) l = std::max(l, e.level);
    return l;
  }

  std::vector<int> active_elements() const {
    std::vector<int> out;
    out.reserve(num_active_);
    for (const auto& e : elements_)
      if (e.active()) out.push_back(e.id);
    return out;
  }

  double to_x(Coord ix) const {
    return domain_.x0 + domain_.width() * (static_cast<double>(ix) / static_cast<double>(extent_x()));
  }
  double to_y(Coord iy) const {
    return domain_.y0 + domain_.height() * (static_cast<double>(iy) / static_cast<double>(extent_y()));
  }
  /// Parametric length of a dyadic span along x (resp. y).
  double span_x(Coord d) const { return h0x() * std::ldexp(static_cast<double>(d), -kMaxLevel); }
  double span_y(Coord d) const { return h0y() * std::ldexp(static_cast<double>(d), -kMaxLevel); }

  /// Vertex id at a dyadic point, or -1.
  int find_vertex(DyadicPoint p) const {
    auto it = vertex_index_.find(p);
    return it == vertex_index_.end() ? -1 : it->second;
  }

  bool on_boundary(DyadicPoint p) const {
    return p.ix == 0 || p.iy == 0 || p.ix == extent_x() || p.iy == extent_y();
  }

  std::vector<int> basis_vertices() const {
    std::vector<int> out;
    for (const auto& v : vertices_)
      if (v.is_basis()) out.push_back(v.id);
    return out;
  }

  int count_kind(VertexKind k) const {
    return static_cast<int>(std::count_if(vertices_.begin(), vertices_.end(),
                                          [k](const MeshVertex& v) { return v.kind == k; }));
  }

  /// dim S(3,3,1,1,T) = 4 (V^b + V^+).
  int dimension() const {
    return 4 * (count_kind(VertexKind::Boundary) + count_kind(VertexKind::InteriorCrossing));
  }

  /// Splits every listed element into four congruent children.
  void refine(const std::vector<int>& ids, RefineOptions opts = {}) {
    for (int id : ids) {
      if (id < 0 || id >= static_cast<int>(elements_.size()))
        throw std::out_of_range("refine: unknown element id " + std::to_string(id));
      if (!elements_[id].active())
        throw std::invalid_argument("refine: element " + std::to_string(id) + " is not active");
    }
    std::vector<DyadicPoint> touched;
    for (int id : ids) {
      if (!elements_[id].active()) continue;  // duplicate id, or split while grading
      if (opts.grade) grade_around(id, touched);
      split(id, touched);
    }
    for (const auto& p : touched) {
      auto& v = vertices_[vertex_index_.at(p)];
      v.kind = classify(p);
    }
  }

  void refine_one(int id, RefineOptions opts = {}) { refine(std::vector<int>{id}, opts); }

  /// Active element whose closure contains the dyadic point and which extends
  /// into the open quadrant (sx, sy), sx, sy in {-1, +1}. Descends at most to
  /// `max_level`. Returns -1 if the quadrant lies outside the domain.
  int quadrant_element(DyadicPoint p, int sx, int sy, int max_level = kMaxLevel) const {
    const Coord u0 = level_unit(0);
    Coord i, j;
    if (sx > 0) {
      if (p.ix >= extent_x()) return -1;
      i = p.ix / u0;
    } else {
      if (p.ix <= 0) return -1;
      i = (p.ix - 1) / u0;
    }
    if (sy > 0) {
      if (p.iy >= extent_y()) return -1;
      j = p.iy / u0;
    } else {
      if (p.iy <= 0) return -1;
      j = (p.iy - 1) / u0;
    }
    int id = static_cast<int>(j * nx_ + i);
    while (!elements_[id].active() && elements_[id].level < max_level) {
      const auto& e = elements_[id];
      const Coord half = e.size() / 2;
      const Coord mx = e.lo.ix + half, my = e.lo.iy + half;
      const int cx = (p.ix > mx || (p.ix == mx && sx > 0)) ? 1 : 0;
      const int cy = (p.iy > my || (p.iy == my && sy > 0)) ? 1 : 0;
      id = e.children[cx + 2 * cy];
    }
    return id;
  }

  /// Distinct active elements whose closure contains the dyadic point.
  std::vector<int> incident_elements(DyadicPoint p) const {
    std::vector<int> out;
    for (int sy : {-1, 1})
      for (int sx : {-1, 1}) {
        const int id = quadrant_element(p, sx, sy);
        if (id >= 0 && std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
      }
    return out;
  }

  /// Active element containing a parametric point. Points on shared edges
  /// resolve to the candidate with the lexicographically smallest (x0, y0).
  int locate(double x, double y) const {
    if (!(x >= domain_.x0 && x <= domain_.x1 && y >= domain_.y0 && y <= domain_.y1)) {
      std::ostringstream os;
      os << "locate: point (" << x << ", " << y << ") outside the domain";
      throw std::out_of_range(os.str());
    }
    int best = leaf_at(x, y, 1, 1);
    const auto& r = elements_[best].rect;
    if (x > r.x0 && x < r.x1 && y > r.y0 && y < r.y1) return best;
    for (int sy : {-1, 1})
      for (int sx : {-1, 1}) {
        const int id = leaf_at(x, y, sx, sy);
        const auto& a = elements_[id].lo;
        const auto& b = elements_[best].lo;
        if (a.ix < b.ix || (a.ix == b.ix && a.iy < b.iy)) best = id;
      }
    return best;
  }

  /// Active elements whose closed rectangle meets the closed dyadic box.
  std::vector<int> elements_touching(DyadicPoint lo, DyadicPoint hi) const {
    std::vector<int> out;
    const Coord u0 = level_unit(0);
    const Coord i0 = std::max<Coord>(0, (lo.ix + u0 - 1) / u0 - 1);
    const Coord i1 = std::min<Coord>(nx_ - 1, hi.ix / u0);
    const Coord j0 = std::max<Coord>(0, (lo.iy + u0 - 1) / u0 - 1);
    const Coord j1 = std::min<Coord>(ny_ - 1, hi.iy / u0);
    for (Coord j = j0; j <= j1; ++j)
      for (Coord i = i0; i <= i1; ++i) collect_touching(static_cast<int>(j * nx_ + i), lo, hi, out);
    return out;
  }

  std::vector<int> neighbors_touching(int elem) const {
    const auto& e = elements_.at(elem);
    return elements_touching(e.lo, e.corner(1, 1));
  }

  /// n-ring patch around a vertex: L(z,0) = {z}, L(z,n) = active elements
  /// meeting the closure of L(z,n-1). Returned sorted by id.
  std::vector<int> layer(int vertex_id, int n) const {
    if (n <= 0) return {};
    std::vector<int> cur = incident_elements(vertices_.at(vertex_id).key);
    std::sort(cur.begin(), cur.end());
    std::vector<int> frontier = cur;
    for (int ring = 2; ring <= n; ++ring) {
      std::vector<int> added;
      for (int e : frontier)
        for (int nb : neighbors_touching(e))
          if (!std::binary_search(cur.begin(), cur.end(), nb)) added.push_back(nb);
      std::sort(added.begin(), added.end());
      added.erase(std::unique(added.begin(), added.end()), added.end());
      if (added.empty()) break;
      std::vector<int> merged;
      std::merge(cur.begin(), cur.end(), added.begin(), added.end(), std::back_inserter(merged));
      cur = std::move(merged);
      frontier = std::move(added);
    }
    return cur;
  }

  /// Recomputes the kind of a vertex from the incident active elements.
  VertexKind classify(DyadicPoint p) const {
    if (on_boundary(p)) return VertexKind::Boundary;
    const int pp = quadrant_element(p, 1, 1);
    const int mp = quadrant_element(p, -1, 1);
    const int mm = quadrant_element(p, -1, -1);
    const int pm = quadrant_element(p, 1, -1);
    const bool east = pp != pm, west = mp != mm, north = pp != mp, south = pm != mm;
    return (east && west && north && south) ? VertexKind::InteriorCrossing : VertexKind::TJunction;
  }

  /// Line format: header "nx ny x0 x1 y0 y1", then "level cell" per split in
  /// application order.
  void dump(std::ostream& os) const {
    const auto old = os.precision();
    os << std::setprecision(17) << nx_ << ' ' << ny_ << ' ' << domain_.x0 << ' ' << domain_.x1 << ' '
       << domain_.y0 << ' ' << domain_.y1 << '\n';
    for (const auto& s : splits_) os << s.level << ' ' << s.cell << '\n';
    os.precision(old);
  }

  static HierarchicalTMesh load(std::istream& is) {
    int nx = 0, ny = 0;
    ParamRect d;
    if (!(is >> nx >> ny >> d.x0 >> d.x1 >> d.y0 >> d.y1))
      throw std::runtime_error("mesh load: malformed header");
    auto m = tensor(nx, ny, d);
    int level;
    std::int64_t cell;
    while (is >> level >> cell) m.refine_one(m.element_for_split({level, cell}));
    if (!is.eof()) throw std::runtime_error("mesh load: malformed split line");
    return m;
  }

  /// Element id addressed by a (level, cell) pair, which must exist.
  int element_for_split(Split s) const {
    if (s.level < 0 || s.level >= kMaxLevel) throw std::out_of_range("split level out of range");
    const std::int64_t row = static_cast<std::int64_t>(nx_) << s.level;
    const std::int64_t rows = static_cast<std::int64_t>(ny_) << s.level;
    if (s.cell < 0 || s.cell >= row * rows) throw std::out_of_range("split cell out of range");
    const Coord u = level_unit(s.level);
    const DyadicPoint c{(s.cell % row) * u + u / 2, (s.cell / row) * u + u / 2};
    const int id = quadrant_element(c, 1, 1, s.level);
    if (elements_[id].level != s.level)
      throw std::invalid_argument("split addresses an element that does not exist yet");
    return id;
  }

 private:
  ParamRect rect_of(DyadicPoint lo, int level) const {
    const Coord s = level_unit(level);
    return {to_x(lo.ix), to_x(lo.ix + s), to_y(lo.iy), to_y(lo.iy + s)};
  }

  int ensure_vertex(DyadicPoint p) {
    auto it = vertex_index_.find(p);
    if (it != vertex_index_.end()) return it->second;
    MeshVertex v;
    v.id = static_cast<int>(vertices_.size());
    v.key = p;
    v.x = to_x(p.ix);
    v.y = to_y(p.iy);
    v.level = std::max(dyadic_level(p.ix), dyadic_level(p.iy));
    vertices_.push_back(v);
    vertex_index_.emplace(p, v.id);
    return v.id;
  }

  void split(int id, std::vector<DyadicPoint>& touched) {
    if (elements_[id].level + 1 >= kMaxLevel) throw std::runtime_error("refine: maximum level reached");
    const MeshElement parent = elements_[id];
    const Coord half = parent.size() / 2;
    for (int c = 0; c < 4; ++c) {
      MeshElement ch;
      ch.id = static_cast<int>(elements_.size());
      ch.level = parent.level + 1;
      ch.lo = {parent.lo.ix + (c % 2) * half, parent.lo.iy + (c / 2) * half};
      ch.rect = rect_of(ch.lo, ch.level);
      ch.parent = id;
      elements_[id].children[c] = ch.id;
      elements_.push_back(ch);
    }
    const Coord x0 = parent.lo.ix, y0 = parent.lo.iy;
    for (DyadicPoint p : {DyadicPoint{x0 + half, y0 + half}, DyadicPoint{x0 + half, y0},
                          DyadicPoint{x0 + half, y0 + 2 * half}, DyadicPoint{x0, y0 + half},
                          DyadicPoint{x0 + 2 * half, y0 + half}}) {
      ensure_vertex(p);
      touched.push_back(p);
    }
    const Coord u = level_unit(parent.level);
    const std::int64_t row = static_cast<std::int64_t>(nx_) << parent.level;
    splits_.push_back({parent.level, (parent.lo.iy / u) * row + parent.lo.ix / u});
    num_active_ += 3;
  }

  void grade_around(int id, std::vector<DyadicPoint>& touched) {
    // Neighbours coarser than the element would end up two levels apart.
    for (;;) {
      int coarse = -1;
      for (int nb : neighbors_touching(id))
        if (elements_[nb].level < elements_[id].level) {
          coarse = nb;
          break;
        }
      if (coarse < 0) return;
      grade_around(coarse, touched);
      split(coarse, touched);
    }
  }

  int leaf_at(double x, double y, int sx, int sy) const {
    auto cell_index = [](double t, double t0, double h, int n, int s) {
      long i = static_cast<long>(std::floor((t - t0) / h));
      i = std::clamp<long>(i, 0, n - 1);
      // Exact comparison against the cell's own boundary.
      if (s < 0 && i > 0 && t <= t0 + h * static_cast<double>(i)) --i;
      if (s > 0 && i < n - 1 && t >= t0 + h * static_cast<double>(i + 1)) ++i;
      return static_cast<int>(i);
    };
    const int i = cell_index(x, domain_.x0, h0x(), nx_, sx);
    const int j = cell_index(y, domain_.y0, h0y(), ny_, sy);
    int id = j * nx_ + i;
    while (!elements_[id].active()) {
      const auto& e = elements_[id];
      const auto& c3 = elements_[e.children[3]].rect;
      const double mx = c3.x0, my = c3.y0;
      const int cx = (x > mx || (x == mx && sx > 0)) ? 1 : 0;
      const int cy = (y > my || (y == my && sy > 0)) ? 1 : 0;
      id = e.children[cx + 2 * cy];
    }
    return id;
  }

  void collect_touching(int id, DyadicPoint lo, DyadicPoint hi, std::vector<int>& out) const {
    const auto& e = elements_[id];
    const auto c = e.corner(1, 1);
    if (e.lo.ix > hi.ix || c.ix < lo.ix || e.lo.iy > hi.iy || c.iy < lo.iy) return;
    if (e.active()) {
      out.push_back(id);
      return;
    }
    for (int ch : e.children) collect_touching(ch, lo, hi, out);
  }

  int nx_ = 0, ny_ = 0;
  ParamRect domain_;
  std::vector<MeshElement> elements_;
  std::vector<MeshVertex> vertices_;
  std::unordered_map<DyadicPoint, int, DyadicPointHash> vertex_index_;
  std::vector<Split> splits_;
  int num_active_ = 0;
};

/// Convenience free functions mirroring the mesh member operations.
inline HierarchicalTMesh new_tensor_mesh(int nx, int ny, ParamRect domain = {}) {
  return HierarchicalTMesh::tensor(nx, ny, domain);
}

}  // namespace pht
