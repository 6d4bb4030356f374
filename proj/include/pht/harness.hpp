#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pht/adapt.hpp"
#include "pht/assembly.hpp"
#include "pht/basis.hpp"
#include "pht/geometry.hpp"
#include "pht/norms.hpp"
#include "pht/recovery.hpp"
#include "pht/tmesh.hpp"

namespace pht {

// ---------------------------------------------------------------------------
// Exact solutions

namespace solutions {

inline Jet sin_sin(const Jet& x, const Jet& y) {
  const double pi = std::numbers::pi;
  return sin(pi * x) * sin(pi * y);
}
inline Jet x7y5(const Jet& x, const Jet& y) { return pow(x, 7) * pow(y, 5); }
inline Jet annulus(const Jet& x, const Jet& y) {
  const Jet r2 = x * x + y * y;
  return (r2 - 0.25) * (r2 - 1.0) * sin(x) * sin(y);
}
inline Jet peak(const Jet& x, const Jet& y) {
  const Jet dx = x - 0.5, dy = y - 0.5;
  return 1.0 / (dx * dx + dy * dy + 0.02);
}
inline Jet layer(const Jet& x, const Jet& y) {
  return 16.0 * x * (1.0 - x) * y * (1.0 - y) * atan(25.0 * x - 100.0 * y + 25.0);
}

inline ScalarField by_name(const std::string& name) {
  static const std::map<std::string, Jet (*)(const Jet&, const Jet&)> table{
      {"sin_sin", sin_sin}, {"x7y5", x7y5}, {"annulus", annulus}, {"peak", peak}, {"layer", layer}};
  auto it = table.find(name);
  if (it == table.end()) throw std::invalid_argument("unknown solution '" + name + "'");
  return it->second;
}

}  // namespace solutions

inline GeometryMap geometry_by_name(const std::string& name) {
  if (name == "identity" || name == "square") return GeometryMap::identity();
  if (name == "annulus") return GeometryMap::polar_annulus();
  if (name == "disk") return GeometryMap::disk();
  throw std::invalid_argument("unknown geometry '" + name + "'");
}

struct TestCase {
  int id = 0;
  std::string name;
  ProblemSpec problem;
  bool adaptive = false;
};

inline TestCase make_test(int id) {
  switch (id) {
    case 1: return {1, "sin(pi x) sin(pi y) on the unit square", manufactured(solutions::sin_sin), false};
    case 2: return {2, "x^7 y^5 on the unit square", manufactured(solutions::x7y5), false};
    case 3:
      return {3, "quarter annulus", manufactured(solutions::annulus, GeometryMap::polar_annulus()), false};
    case 4: return {4, "x^7 y^5 on the unit disk", manufactured(solutions::x7y5, GeometryMap::disk()), false};
    case 5: return {5, "central peak (adaptive)", manufactured(solutions::peak), true};
    case 6: return {6, "interior layer (adaptive)", manufactured(solutions::layer), true};
  }
  throw std::invalid_argument("test id must be in 1..6");
}

// ---------------------------------------------------------------------------
// Reporting region

/// Distance from a physical point to the boundary of a mapped square,
/// measured against a dense sampling of the boundary curve.
inline double physical_boundary_distance(const GeometryMap& g, double x, double y, int samples = 2048) {
  double d2 = std::numeric_limits<double>::infinity();
  for (int side = 0; side < 4; ++side)
    for (int k = 0; k <= samples; ++k) {
      const double t = static_cast<double>(k) / samples;
      const double s = side == 0 ? t : side == 1 ? 1.0 : side == 2 ? t : 0.0;
      const double r = side == 0 ? 0.0 : side == 1 ? t : side == 2 ? 1.0 : t;
      const auto p = g.map(s, r);
      d2 = std::min(d2, (p.x() - x) * (p.x() - x) + (p.y() - y) * (p.y() - y));
    }
  return std::sqrt(d2);
}

/// Omega_{h,1}: active elements whose vertices all lie at distance >= L from
/// the boundary. Parametric distance by default; physical if a geometry is
/// passed.
inline std::vector<int> interior_region(const HierarchicalTMesh& mesh, double L,
                                        const GeometryMap* physical = nullptr) {
  const auto& d = mesh.domain();
  std::vector<int> out;
  for (int e : mesh.active_elements()) {
    const auto& r = mesh.element(e).rect;
    bool ok = true;
    for (double x : {r.x0, r.x1})
      for (double y : {r.y0, r.y1}) {
        double dist;
        if (physical) {
          const auto p = physical->map(x, y);
          dist = physical_boundary_distance(*physical, p.x(), p.y());
        } else {
          dist = std::min({x - d.x0, d.x1 - x, y - d.y0, d.y1 - y});
        }
        if (dist < L - 1e-12) ok = false;
      }
    if (ok) out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Studies

struct ConvergenceRow {
  int step = 0;
  double h_or_dofs = 0;
  int dofs = 0;
  double err_grad = 0;
  double rate_grad = std::numeric_limits<double>::quiet_NaN();
  double err_rec = 0;
  double rate_rec = std::numeric_limits<double>::quiet_NaN();
  double eta = 0;
  double kappa = 0;
};

struct RunOptions {
  int min_cells = 8;
  int max_cells = 64;
  double theta = 0.5;
  int max_dofs = 100000;
  int initial_cells = 8;
  SamplingPolicy policy = SamplingPolicy::Enriched;
  int quad_order = 4;
  int norm_order = 5;
  int jobs = 1;
  double L = 0.125;
  bool physical_distance = false;
  SolverKind solver = SolverKind::Iterative;
};

struct StudyResult {
  std::vector<ConvergenceRow> rows;
  std::optional<AdaptiveRunLog> log;
  /// Finest (uniform) or final (adaptive) mesh and recovered gradient.
  std::shared_ptr<const HierarchicalTMesh> final_mesh;
  std::optional<RecoveredGradient> final_gradient;
};

inline double observed_rate(double e_prev, double e_cur, double ratio) {
  return std::log(e_prev / e_cur) / std::log(ratio);
}

/// Uniform tensor ladder min_cells, 2*min_cells, ..., max_cells per axis.
inline StudyResult uniform_study(const ProblemSpec& prob, const RunOptions& o,
                                 const std::function<void(const ConvergenceRow&)>& on_row = {}) {
  StudyResult res;
  int step = 0;
  for (int n = o.min_cells; n <= o.max_cells; n *= 2, ++step) {
    auto basis = make_basis(HierarchicalTMesh::tensor(n, n));
    const auto uh = solve_problem(basis, prob, {o.quad_order, o.jobs}, {.kind = o.solver});
    const auto g = recover(uh, prob.geometry, {o.policy, o.jobs});
    const auto& mesh = basis->mesh();
    const ScalarField* ex = prob.exact ? &prob.exact : nullptr;
    const auto ind = estimate(uh, g, ex, o.norm_order, o.jobs);
    ConvergenceRow r;
    r.step = step;
    r.h_or_dofs = 1.0 / n;
    r.dofs = static_cast<int>(basis->size());
    r.eta = ind.eta;
    if (ex) {
      r.err_grad = ind.err_grad;
      const auto region = interior_region(mesh, o.L, o.physical_distance ? &prob.geometry : nullptr);
      r.err_rec = error_norms(prob.exact, uh, &g, prob.geometry, region, o.norm_order, o.jobs).err_rec;
      r.kappa = ind.kappa;
    }
    if (!res.rows.empty()) {
      const auto& p = res.rows.back();
      r.rate_grad = observed_rate(p.err_grad, r.err_grad, 2.0);
      r.rate_rec = observed_rate(p.err_rec, r.err_rec, 2.0);
    }
    if (on_row) on_row(r);
    res.rows.push_back(r);
    res.final_mesh = basis->mesh_ptr();
    res.final_gradient = g;
  }
  return res;
}

/// Adaptive loop from an initial_cells^2 tensor mesh; rates are against
/// dofs^(-1/2).
inline StudyResult adaptive_study(const ProblemSpec& prob, const RunOptions& o,
                                  const std::function<void(const ConvergenceRow&)>& on_row = {}) {
  AdaptiveOptions ao;
  ao.theta = o.theta;
  ao.max_dofs = o.max_dofs;
  ao.norm_order = o.norm_order;
  ao.recovery = {o.policy, o.jobs};
  ao.assembly = {o.quad_order, o.jobs};
  ao.solver.kind = o.solver;
  StudyResult res;
  ao.on_step = [&](const AdaptiveStep& s) {
    ConvergenceRow r;
    r.step = s.iter;
    r.h_or_dofs = s.dofs;
    r.dofs = s.dofs;
    r.err_grad = s.err_grad;
    r.err_rec = s.err_rec;
    r.eta = s.eta;
    r.kappa = s.kappa;
    if (!res.rows.empty()) {
      const auto& p = res.rows.back();
      const double ratio = std::sqrt(static_cast<double>(s.dofs) / p.dofs);
      r.rate_grad = observed_rate(p.err_grad, r.err_grad, ratio);
      r.rate_rec = observed_rate(p.err_rec, r.err_rec, ratio);
    }
    if (on_row) on_row(r);
    res.rows.push_back(r);
  };
  res.log = adaptive_solve(prob, HierarchicalTMesh::tensor(o.initial_cells, o.initial_cells), ao);
  res.final_mesh = res.log->final_mesh;
  res.final_gradient = recover(res.log->final_solution, prob.geometry, ao.recovery);
  return res;
}

inline StudyResult run_study(const TestCase& tc, const RunOptions& o,
                             const std::function<void(const ConvergenceRow&)>& on_row = {}) {
  return tc.adaptive ? adaptive_study(tc.problem, o, on_row) : uniform_study(tc.problem, o, on_row);
}

// ---------------------------------------------------------------------------
// Output

inline void write_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << "step,h_or_dofs,dofs,err_grad,rate_grad,err_rec,rate_rec,eta,kappa\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.step << ',' << r.h_or_dofs << ',' << r.dofs << ',' << r.err_grad << ',' << r.rate_grad << ','
       << r.err_rec << ',' << r.rate_rec << ',' << r.eta << ',' << r.kappa << '\n';
}

/// Two-column gnuplot files, one per curve: <prefix>_err_grad.dat etc.
inline std::vector<std::string> write_plot_data(const std::string& prefix, const std::vector<ConvergenceRow>& rows) {
  std::vector<std::string> files;
  const std::pair<const char*, double ConvergenceRow::*> curves[] = {
      {"err_grad", &ConvergenceRow::err_grad}, {"err_rec", &ConvergenceRow::err_rec},
      {"eta", &ConvergenceRow::eta}, {"kappa", &ConvergenceRow::kappa}};
  for (const auto& [name, field] : curves) {
    const std::string path = prefix + "_" + name + ".dat";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "# h_or_dofs " << name << '\n';
    f.precision(10);
    for (const auto& r : rows) f << r.h_or_dofs << ' ' << r.*field << '\n';
    files.push_back(path);
  }
  return files;
}

// ---------------------------------------------------------------------------
// Verdicts

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct RateWindow {
  double lo, hi;
  bool contains(double r) const { return r >= lo && r <= hi; }
};

/// Rates between the two finest levels inside the given windows.
inline Verdict check_rates(const std::vector<ConvergenceRow>& rows, RateWindow grad, RateWindow rec) {
  std::ostringstream os;
  if (rows.size() < 2) return {false, "fewer than two ladder levels"};
  const auto& r = rows.back();
  const bool ok = grad.contains(r.rate_grad) && rec.contains(r.rate_rec);
  os << "rate_grad " << r.rate_grad << " in [" << grad.lo << ", " << grad.hi << "], rate_rec " << r.rate_rec
     << " in [" << rec.lo << ", " << rec.hi << "]";
  return {ok, os.str()};
}

/// Fixed neighbourhood of the singular set of Tests 5 and 6, as a predicate
/// on element rectangles.
inline std::function<bool(const ParamRect&)> singular_neighbourhood(int test_id) {
  if (test_id == 5)
    return [](const ParamRect& r) {
      const double cx = std::clamp(0.5, r.x0, r.x1), cy = std::clamp(0.5, r.y0, r.y1);
      return std::hypot(cx - 0.5, cy - 0.5) <= 0.25;
    };
  if (test_id == 6)
    return [](const ParamRect& r) {
      // band |25x - 100y + 25| / |(25, -100)| <= 0.1
      const double lim = 0.1 * std::hypot(25.0, 100.0);
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (double x : {r.x0, r.x1})
        for (double y : {r.y0, r.y1}) {
          const double v = 25 * x - 100 * y + 25;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      return hi >= -lim && lo <= lim;
    };
  throw std::invalid_argument("no singular set for this test");
}

/// Final effective index in [0.85, 1.15] and >= 80% of marked elements in the
/// singular neighbourhood at every iteration >= 3.
inline Verdict check_adaptive(int test_id, const AdaptiveRunLog& log, int min_dofs = 100000) {
  std::ostringstream os;
  if (log.steps.empty()) return {false, "no iterations"};
  const auto& last = log.steps.back();
  const bool kappa_ok = last.kappa >= 0.85 && last.kappa <= 1.15;
  const bool budget_ok = last.dofs >= min_dofs;
  const auto inside = singular_neighbourhood(test_id);
  double worst = 1.0;
  for (const auto& s : log.steps) {
    if (s.iter < 3 || s.marked.empty()) continue;
    const auto hit = std::count_if(s.marked.begin(), s.marked.end(), inside);
    worst = std::min(worst, static_cast<double>(hit) / s.marked.size());
  }
  os << "final kappa " << last.kappa << " at " << last.dofs << " dofs, min marked fraction near singular set "
     << worst;
  return {kappa_ok && budget_ok && worst >= 0.8, os.str()};
}

// ---------------------------------------------------------------------------
// Custom study configuration: "key = value" lines
//   solution = sin_sin | x7y5 | annulus | peak | layer
//   geometry = identity | annulus | disk
//   A = a11 a12 a21 a22      b = b1 b2      c = value
//   mode = uniform | adaptive, min_cells, max_cells, theta, max_dofs

struct StudyConfig {
  TestCase test;
  RunOptions options;
};

inline StudyConfig parse_study_config(std::istream& is, RunOptions base = {}) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto take = [&](const std::string& k) -> std::optional<std::string> {
    auto it = kv.find(k);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto numbers = [](const std::string& s, std::size_t n, const std::string& key) {
    std::istringstream ss(s);
    std::vector<double> v(n);
    for (auto& x : v)
      if (!(ss >> x)) throw std::runtime_error("config: '" + key + "' needs " + std::to_string(n) + " numbers");
    return v;
  };

  StudyConfig cfg;
  cfg.options = base;
  const auto sol = take("solution");
  if (!sol) throw std::runtime_error("config: 'solution' is required");
  const auto geo = geometry_by_name(take("geometry").value_or("identity"));
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  double c = 0;
  if (auto s = take("A")) {
    const auto v = numbers(*s, 4, "A");
    A << v[0], v[1], v[2], v[3];
  }
  if (auto s = take("b")) {
    const auto v = numbers(*s, 2, "b");
    b << v[0], v[1];
  }
  if (auto s = take("c")) c = numbers(*s, 1, "c")[0];
  cfg.test.id = 0;
  cfg.test.name = *sol;
  cfg.test.problem = manufactured(solutions::by_name(*sol), geo, A, b, c);
  cfg.test.problem.validate();
  if (auto s = take("mode")) {
    if (*s != "uniform" && *s != "adaptive") throw std::runtime_error("config: mode must be uniform or adaptive");
    cfg.test.adaptive = *s == "adaptive";
  }
  if (auto s = take("min_cells")) cfg.options.min_cells = std::stoi(*s);
  if (auto s = take("max_cells")) cfg.options.max_cells = std::stoi(*s);
  if (auto s = take("theta")) cfg.options.theta = std::stod(*s);
  if (auto s = take("max_dofs")) cfg.options.max_dofs = std::stoi(*s);
  if (!kv.empty()) throw std::runtime_error("config: unknown key '" + kv.begin()->first + "'");
  return cfg;
}

}  // namespace pht
