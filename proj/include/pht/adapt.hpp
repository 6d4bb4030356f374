#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "pht/assembly.hpp"
#include "pht/basis.hpp"
#include "pht/norms.hpp"
#include "pht/recovery.hpp"
#include "pht/tmesh.hpp"

namespace pht {

struct ErrorIndicators {
  std::vector<int> elements;  // active element ids
  std::vector<double> local;  // eta_K, aligned with elements
  double eta = 0;
  double err_grad = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
};

/// eta_K = ||G_h u_h - grad u_h||_{0,K}; with an exact solution also the true
/// gradient error and the effective index eta / ||grad u - grad u_h||.
inline ErrorIndicators estimate(const SplineFunction& uh, const RecoveredGradient& g,
                                const ScalarField* exact = nullptr, int order = 5, int jobs = 1) {
  ErrorIndicators ind;
  ind.elements = uh.basis->mesh().active_elements();
  ind.local.resize(ind.elements.size());
  std::vector<double> err(ind.elements.size(), 0.0);
  parallel_for(ind.elements.size(), jobs, [&](std::size_t i) {
    double s = 0, t = 0;
    for_each_gradient_point(uh, &g, g.geometry, ind.elements[i], order, [&](const GradientPoint& p) {
      s += p.w * (p.grad_rec - p.grad_h).squaredNorm();
      if (exact) {
        const Jet ex = (*exact)(Jet::var_x(p.x.x()), Jet::var_y(p.x.y()));
        t += p.w * (Eigen::Vector2d(ex.dx, ex.dy) - p.grad_h).squaredNorm();
      }
    });
    ind.local[i] = std::sqrt(s);
    err[i] = t;
  });
  double s2 = 0;
  for (double v : ind.local) s2 += v * v;
  ind.eta = std::sqrt(s2);
  if (exact) {
    ind.err_grad = std::sqrt(std::accumulate(err.begin(), err.end(), 0.0));
    ind.kappa = ind.eta / ind.err_grad;
  }
  return ind;
}

/// Dörfler marking: smallest set, by descending eta_K with ties broken by
/// element id, carrying theta * eta^2.
inline std::vector<int> mark(const ErrorIndicators& ind, double theta) {
  if (!(theta > 0 && theta < 1)) throw std::invalid_argument("marking fraction must lie in (0, 1)");
  if (ind.elements.empty()) throw std::invalid_argument("no indicators to mark");
  std::vector<std::size_t> order(ind.elements.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ind.local[a] != ind.local[b]) return ind.local[a] > ind.local[b];
    return ind.elements[a] < ind.elements[b];
  });
  double total = 0;
  for (double v : ind.local) total += v * v;
  const double target = theta * total;
  std::vector<int> out;
  double acc = 0;
  for (std::size_t k : order) {
    if (acc >= target && !out.empty()) break;
    out.push_back(ind.elements[k]);
    acc += ind.local[k] * ind.local[k];
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct AdaptiveStep {
  int iter = 0;
  int dofs = 0;
  double eta = 0;
  double err_grad = 0;
  double err_rec = 0;
  double kappa = 0;
  std::vector<ParamRect> marked;  // rectangles of the elements marked this iteration
};

struct AdaptiveRunLog {
  std::vector<AdaptiveStep> steps;
  std::shared_ptr<const HierarchicalTMesh> final_mesh;
  SplineFunction final_solution;

  void write_csv(std::ostream& os) const {
    os << "iter,dofs,eta,err_grad,err_rec,kappa,marked\n";
    os.precision(10);
    for (const auto& s : steps)
      os << s.iter << ',' << s.dofs << ',' << s.eta << ',' << s.err_grad << ',' << s.err_rec << ',' << s.kappa << ','
         << s.marked.size() << '\n';
  }
};

struct AdaptiveOptions {
  double theta = 0.5;
  int max_dofs = 100000;
  int max_iterations = 100;
  int norm_order = 5;
  RecoveryOptions recovery;
  AssemblyOptions assembly;
  SolveOptions solver;
  std::function<void(const AdaptiveStep&)> on_step;
};

/// solve -> recover -> estimate -> mark -> refine, until the basis reaches
/// max_dofs. The final iteration is solved and logged but not marked.
inline AdaptiveRunLog adaptive_solve(const ProblemSpec& prob, HierarchicalTMesh mesh, const AdaptiveOptions& opts = {}) {
  AdaptiveRunLog log;
  SplineFunction prev;
  for (int it = 0;; ++it) {
    try {
      auto smesh = std::make_shared<const HierarchicalTMesh>(mesh);
      auto basis = make_basis(*smesh);
      // The refined space contains the previous solution; its interpolant
      // reproduces it and seeds the iterative solver.
      std::optional<SplineFunction> guess;
      if (prev.basis)
        guess = InterpolationOperator(basis).interpolate_function(
            [&](const Jet& x, const Jet& y) { return prev.eval(x.v, y.v); });
      auto uh = solve_problem(basis, prob, opts.assembly, opts.solver, nullptr, guess ? &*guess : nullptr);
      auto g = recover(uh, prob.geometry, opts.recovery);
      const ScalarField* ex = prob.exact ? &prob.exact : nullptr;
      auto ind = estimate(uh, g, ex, opts.norm_order, opts.assembly.jobs);
      AdaptiveStep st;
      st.iter = it;
      st.dofs = static_cast<int>(basis->size());
      st.eta = ind.eta;
      if (ex) {
        st.err_grad = ind.err_grad;
        st.err_rec = error_norms(prob.exact, uh, &g, prob.geometry, ind.elements, opts.norm_order, opts.assembly.jobs)
                         .err_rec;
        st.kappa = ind.kappa;
      }
      const bool last = st.dofs >= opts.max_dofs || it + 1 >= opts.max_iterations;
      std::vector<int> marked;
      if (!last) {
        marked = mark(ind, opts.theta);
        for (int e : marked) st.marked.push_back(mesh.element(e).rect);
      }
      if (opts.on_step) opts.on_step(st);
      log.steps.push_back(std::move(st));
      if (last) {
        log.final_mesh = smesh;
        log.final_solution = std::move(uh);
        return log;
      }
      prev = std::move(uh);
      mesh.refine(marked);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "adaptive iteration " << it << ": " << e.what();
      throw std::runtime_error(os.str());
    }
  }
}

}  // namespace pht
