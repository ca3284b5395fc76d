#include "vishape/adjoint.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace vishape {

AdjointSolution solve_adjoint(const ProblemData& prob, const TriMesh& mesh, const VISolution& sol,
                              AdjointMode mode) {
  const SparseMat K = assemble_bilinear(mesh, prob.coeffs);
  const SparseMat Kt = SparseMat(K.transpose());
  const ScalarField ybar = sample_values(*prob.target, mesh);
  const ScalarField rhs = assemble_mass(mesh) * (sol.y - ybar);

  AdjointSolution adj;
  adj.mode = mode;

  std::vector<int> fixed = outer_dirichlet_nodes(mesh);
  if (mode == AdjointMode::limit) {
    fixed.insert(fixed.end(), sol.active_nodes.begin(), sol.active_nodes.end());
    std::sort(fixed.begin(), fixed.end());
    fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
    adj.v = solve_constrained(Kt, rhs, fixed, ScalarField::Zero(static_cast<Eigen::Index>(fixed.size())));
    const ReducedSystem red = reduce_system(Kt, rhs, fixed, ScalarField::Zero(static_cast<Eigen::Index>(fixed.size())));
    ScalarField vf(red.free_ids.size());
    for (std::size_t k = 0; k < red.free_ids.size(); ++k) vf[static_cast<Eigen::Index>(k)] = adj.v[red.free_ids[k]];
    adj.residual = (red.A * vf - red.rhs).lpNorm<Eigen::Infinity>();
    return adj;
  }

  const SparseMat Ma = assemble_mass_indicator(mesh, active_set_triangles(sol, mesh));
  const SparseMat S = Kt - prob.c * Ma;
  const ReducedSystem red = reduce_system(S, rhs, fixed, ScalarField::Zero(static_cast<Eigen::Index>(fixed.size())));

  // The operator can lose definiteness as c grows; report instead of
  // silently returning a meaningless factorization result.
  Eigen::SimplicialLDLT<SparseMat> ldlt(red.A);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
    const double eig = smallest_eigenvalue_estimate(red.A);
    throw AdjointError("solve_adjoint: paper-exact operator indefinite or singular for c = " +
                           std::to_string(prob.c) +
                           " (smallest eigenvalue estimate " + std::to_string(eig) + ")",
                       eig);
  }
  const ScalarField vf = ldlt.solve(red.rhs);
  adj.v = ScalarField::Zero(mesh.node_count());
  for (std::size_t k = 0; k < red.free_ids.size(); ++k) adj.v[red.free_ids[k]] = vf[static_cast<Eigen::Index>(k)];
  adj.residual = (red.A * vf - red.rhs).lpNorm<Eigen::Infinity>();
  if (!(adj.residual <= 1e-10 * (1.0 + red.rhs.lpNorm<Eigen::Infinity>() + vf.lpNorm<Eigen::Infinity>()))) {
    throw AdjointError("solve_adjoint: paper-exact residual too large", 0.0);
  }
  return adj;
}

AdjointSolution solve_adjoint(const ProblemData& prob, const TriMesh& mesh, const VISolution& sol) {
  return solve_adjoint(prob, mesh, sol, prob.adjoint_mode);
}

double eval_lagrangian(const ProblemData& prob, const TriMesh& mesh, const ScalarField& y,
                       const ScalarField& v, const ScalarField& lambda) {
  const SparseMat K = assemble_bilinear(mesh, prob.coeffs);
  const SparseMat M = assemble_mass(mesh);
  const ScalarField ybar = sample_values(*prob.target, mesh);
  const ScalarField phi = sample_values(*prob.obstacle, mesh);
  const ScalarField load = prob.source.load(mesh);
  const ScalarField mass = lumped_mass(mesh);

  const ScalarField e = y - ybar;
  double value = 0.5 * e.dot(M * e);
  value += v.dot(K * y);
  value -= load.dot(v);
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    value += mass[k] * std::max(0.0, lambda[k] + prob.c * (y[k] - phi[k])) * v[k];
  }
  value += prob.nu * interface_length(mesh);
  return value;
}

double adjoint_stationarity_residual(const ProblemData& prob, const TriMesh& mesh,
                                     const VISolution& sol, const AdjointSolution& adj) {
  const SparseMat K = assemble_bilinear(mesh, prob.coeffs);
  const SparseMat Ma = assemble_mass_indicator(mesh, active_set_triangles(sol, mesh));
  const ScalarField ybar = sample_values(*prob.target, mesh);
  const ScalarField r =
      assemble_mass(mesh) * (sol.y - ybar) - SparseMat(K.transpose()) * adj.v + prob.c * (Ma * adj.v);

  std::vector<char> skip(static_cast<std::size_t>(mesh.node_count()), 0);
  for (int i : outer_dirichlet_nodes(mesh)) skip[static_cast<std::size_t>(i)] = 1;
  if (adj.mode == AdjointMode::limit) {
    for (int i : sol.active_nodes) skip[static_cast<std::size_t>(i)] = 1;
  }
  double worst = 0.0;
  for (int k = 0; k < mesh.node_count(); ++k) {
    if (!skip[static_cast<std::size_t>(k)]) worst = std::max(worst, std::abs(r[k]));
  }
  return worst;
}

double state_stationarity_residual(const ProblemData& prob, const TriMesh& mesh,
                                   const VISolution& sol) {
  const SparseMat K = assemble_bilinear(mesh, prob.coeffs);
  const ScalarField phi = sample_values(*prob.obstacle, mesh);
  const ScalarField load = prob.source.load(mesh);
  const ScalarField mass = lumped_mass(mesh);
  const ScalarField Ky = K * sol.y;

  std::vector<char> skip(static_cast<std::size_t>(mesh.node_count()), 0);
  for (int i : outer_dirichlet_nodes(mesh)) skip[static_cast<std::size_t>(i)] = 1;
  double worst = 0.0;
  for (int k = 0; k < mesh.node_count(); ++k) {
    if (skip[static_cast<std::size_t>(k)]) continue;
    const double mx = std::max(0.0, sol.lambda[k] + prob.c * (sol.y[k] - phi[k]));
    worst = std::max(worst, std::abs(Ky[k] + mass[k] * mx - load[k]));
  }
  return worst;
}

}  // namespace vishape
