#include "vishape/problem.hpp"

namespace vishape {

VISolution solve_state(const ProblemData& prob, const TriMesh& mesh) {
  const ScalarField phi = sample_values(*prob.obstacle, mesh);
  return solve_obstacle_load(mesh, prob.coeffs, prob.source.load(mesh), phi, prob.pdas());
}

double tracking_value(const ProblemData& prob, const TriMesh& mesh, const ScalarField& y) {
  const ScalarField e = y - sample_values(*prob.target, mesh);
  const SparseMat M = assemble_mass(mesh);
  return 0.5 * e.dot(M * e);
}

double objective_value(const ProblemData& prob, const TriMesh& mesh, const ScalarField& y) {
  return tracking_value(prob, mesh, y) + prob.nu * interface_length(mesh);
}

}  // namespace vishape
