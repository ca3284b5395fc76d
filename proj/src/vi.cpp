#include "vishape/vi.hpp"

#include <algorithm>
#include <cmath>

namespace vishape {

namespace {

void check_obstacle_feasible(const TriMesh& mesh, const ScalarField& phi) {
  if (phi.size() != mesh.node_count()) throw ViError("obstacle: field size mismatch");
  for (int i : outer_dirichlet_nodes(mesh)) {
    if (phi[i] < 0.0) {
      throw ViError("obstacle: infeasible, phi < 0 on the outer boundary (node " +
                    std::to_string(i) + ")");
    }
  }
}

void finalize_residuals(VISolution& sol, const ScalarField& phi) {
  double comp = 0.0, feas = 0.0;
  for (Eigen::Index k = 0; k < sol.y.size(); ++k) {
    comp = std::max(comp, std::abs(sol.lambda[k] * (sol.y[k] - phi[k])));
    feas = std::max(feas, std::max(sol.y[k] - phi[k], -sol.lambda[k]));
  }
  sol.comp_residual = comp;
  sol.feas_residual = std::max(feas, 0.0);
}

}  // namespace

VISolution solve_obstacle_load(const TriMesh& mesh, const BilinearCoeffs& coeffs,
                               const ScalarField& load, const ScalarField& phi,
                               const PdasOptions& opt) {
  if (!(opt.c > 0.0)) throw ViError("solve_obstacle: c must be positive");
  check_obstacle_feasible(mesh, phi);
  if (load.size() != mesh.node_count()) throw ViError("solve_obstacle: load size mismatch");

  const SparseMat K = assemble_bilinear(mesh, coeffs);
  const ScalarField mass = lumped_mass(mesh);
  const std::vector<int> dirichlet = outer_dirichlet_nodes(mesh);
  std::vector<char> is_dirichlet(static_cast<std::size_t>(mesh.node_count()), 0);
  for (int i : dirichlet) is_dirichlet[static_cast<std::size_t>(i)] = 1;

  // Warm start: unconstrained solve with lambda = 0.
  ScalarField y = solve_dirichlet(K, load, mesh);
  ScalarField lambda = ScalarField::Zero(mesh.node_count());

  std::vector<char> active(static_cast<std::size_t>(mesh.node_count()), 0);
  auto predict = [&](std::vector<char>& out) {
    for (int k = 0; k < mesh.node_count(); ++k) {
      const bool on = !is_dirichlet[static_cast<std::size_t>(k)] &&
                      lambda[k] + opt.c * (y[k] - phi[k]) > 0.0;
      out[static_cast<std::size_t>(k)] = on ? 1 : 0;
    }
  };
  predict(active);

  VISolution sol;
  for (int it = 1; it <= opt.max_iter; ++it) {
    // Constrained solve: y = phi on the active set, zero on the boundary.
    std::vector<int> fixed = dirichlet;
    std::vector<double> fixed_vals(dirichlet.size(), 0.0);
    for (int k = 0; k < mesh.node_count(); ++k) {
      if (active[static_cast<std::size_t>(k)]) {
        fixed.push_back(k);
        fixed_vals.push_back(phi[k]);
      }
    }
    ScalarField vals = Eigen::Map<const ScalarField>(fixed_vals.data(),
                                                     static_cast<Eigen::Index>(fixed_vals.size()));
    y = solve_constrained(K, load, fixed, vals);

    // Multiplier from the equation residual, lumped to a nodal L2 value.
    const ScalarField residual = load - K * y;
    lambda.setZero();
    for (int k = 0; k < mesh.node_count(); ++k) {
      if (active[static_cast<std::size_t>(k)]) lambda[k] = residual[k] / mass[k];
    }

    std::vector<char> next(active.size());
    predict(next);
    if (next == active) {
      sol.iterations = it;
      break;
    }
    active = next;
    if (it == opt.max_iter) throw ViError("solve_obstacle: active set did not settle in max_iter");
  }

  sol.y = y;
  sol.lambda = lambda;
  for (int k = 0; k < mesh.node_count(); ++k) {
    if (active[static_cast<std::size_t>(k)]) sol.active_nodes.push_back(k);
  }
  finalize_residuals(sol, phi);
  if (sol.comp_residual > opt.tol * (1.0 + lambda.cwiseAbs().maxCoeff()) ||
      sol.feas_residual > opt.tol * (1.0 + phi.cwiseAbs().maxCoeff())) {
    throw ViError("solve_obstacle: converged active set but residuals above tolerance");
  }
  return sol;
}

VISolution solve_obstacle(const TriMesh& mesh, const BilinearCoeffs& coeffs,
                          const ScalarField& f_nodal, const ScalarField& phi,
                          const PdasOptions& opt) {
  return solve_obstacle_load(mesh, coeffs, assemble_load(mesh, f_nodal), phi, opt);
}

VISolution oracle_small(const TriMesh& mesh, const BilinearCoeffs& coeffs,
                        const ScalarField& load, const ScalarField& phi) {
  if (coeffs.d.norm() != 0.0) throw ViError("oracle_small: requires a symmetric energy (d = 0)");
  if (mesh.node_count() > 200) throw ViError("oracle_small: mesh too large for the oracle");
  check_obstacle_feasible(mesh, phi);

  const SparseMat K = assemble_bilinear(mesh, coeffs);
  const std::vector<int> dirichlet = outer_dirichlet_nodes(mesh);
  std::vector<char> is_dirichlet(static_cast<std::size_t>(mesh.node_count()), 0);
  for (int i : dirichlet) is_dirichlet[static_cast<std::size_t>(i)] = 1;

  // Lipschitz constant of the gradient via power iteration on K.
  ScalarField z = ScalarField::Constant(mesh.node_count(), 1.0);
  z += 0.01 * ScalarField::LinSpaced(mesh.node_count(), 0.0, 1.0);
  double lmax = 1.0;
  for (int k = 0; k < 200; ++k) {
    z = K * z;
    lmax = z.norm();
    if (lmax == 0.0) break;
    z /= lmax;
  }
  const double step = 1.0 / (1.05 * std::max(lmax, 1e-12));

  ScalarField y = ScalarField::Zero(mesh.node_count());
  for (int k = 0; k < mesh.node_count(); ++k) {
    if (!is_dirichlet[static_cast<std::size_t>(k)]) y[k] = std::min(0.0, phi[k]);
  }

  const int max_sweeps = 400000;
  double change = 0.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    ScalarField grad = K * y - load;
    ScalarField ynew = y - step * grad;
    for (int k = 0; k < mesh.node_count(); ++k) {
      if (is_dirichlet[static_cast<std::size_t>(k)]) {
        ynew[k] = 0.0;
      } else {
        ynew[k] = std::min(ynew[k], phi[k]);
      }
    }
    change = (ynew - y).lpNorm<Eigen::Infinity>();
    y = ynew;
    if (change < 1e-15 * (1.0 + y.lpNorm<Eigen::Infinity>()) && sweep > 10) break;
  }

  VISolution sol;
  sol.y = y;
  sol.iterations = 0;
  const ScalarField residual = load - K * y;
  const ScalarField mass = lumped_mass(mesh);
  sol.lambda = ScalarField::Zero(mesh.node_count());
  for (int k = 0; k < mesh.node_count(); ++k) {
    if (is_dirichlet[static_cast<std::size_t>(k)]) continue;
    if (phi[k] - y[k] <= 1e-10 * (1.0 + std::abs(phi[k]))) {
      sol.lambda[k] = std::max(0.0, residual[k] / mass[k]);
      if (sol.lambda[k] > 0.0) sol.active_nodes.push_back(k);
    }
  }
  finalize_residuals(sol, phi);
  return sol;
}

std::vector<int> active_set_triangles(const VISolution& sol, const TriMesh& mesh) {
  std::vector<char> active(static_cast<std::size_t>(mesh.node_count()), 0);
  for (int k : sol.active_nodes) active[static_cast<std::size_t>(k)] = 1;
  std::vector<int> out;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tv = mesh.triangles[static_cast<std::size_t>(t)];
    if (active[static_cast<std::size_t>(tv[0])] && active[static_cast<std::size_t>(tv[1])] &&
        active[static_cast<std::size_t>(tv[2])]) {
      out.push_back(t);
    }
  }
  return out;
}

}  // namespace vishape
