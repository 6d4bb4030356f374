// Solve -Laplace(u) = f on the unit square for u = sin(pi x) sin(pi y),
// refine the corner cell twice, recover the gradient and report the errors.

#include <cstdio>

#include "pht/pht.hpp"

int main() {
  using namespace pht;
  auto mesh = HierarchicalTMesh::tensor(8, 8);
  mesh.refine_one(mesh.locate(0.01, 0.01));
  mesh.refine_one(mesh.locate(0.01, 0.01));

  const auto prob = manufactured(solutions::sin_sin);
  const auto basis = make_basis(mesh);
  SolveReport rep;
  const auto uh = solve_problem(basis, prob, {}, {}, &rep);
  const auto g = recover(uh);
  const auto ind = estimate(uh, g, &prob.exact);
  const auto err = error_norms(prob.exact, uh, &g, prob.geometry, interior_region(mesh, 0.125));

  std::printf("dofs %zu, CG iterations %d\n", basis->size(), rep.iterations);
  std::printf("|grad(u - u_h)|        %.4e\n", ind.err_grad);
  std::printf("|grad u - G u_h| inner %.4e\n", err.err_rec);
  std::printf("eta %.4e, kappa %.4f\n", ind.eta, ind.kappa);
}
