#pragma once

// Obstacle-type variational inequality solver. The complementarity system
//   a(y, p) + (lambda, p) = (f, p),  lambda >= 0,  y <= phi,  lambda (y - phi) = 0
// is solved through the reformulation lambda = max(0, lambda + c (y - phi))
// with a primal-dual active-set iteration. A projected-gradient oracle for
// tiny meshes backs the tests.

#include <vector>

#include "vishape/fem.hpp"
#include "vishape/mesh.hpp"

namespace vishape {

struct ViError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VISolution {
  ScalarField y;
  ScalarField lambda;              // nodal multiplier (lumped L2 representative)
  std::vector<int> active_nodes;   // sorted; ties classified inactive
  double comp_residual = 0.0;      // max_k |lambda_k (y_k - phi_k)|
  double feas_residual = 0.0;      // max constraint violation
  int iterations = 0;
};

struct PdasOptions {
  double c = 100.0;
  double tol = 1e-10;
  int max_iter = 60;
};

/// PDAS on a pre-assembled load vector. phi must be >= 0 at outer nodes.
VISolution solve_obstacle_load(const TriMesh& mesh, const BilinearCoeffs& coeffs,
                               const ScalarField& load, const ScalarField& phi,
                               const PdasOptions& opt = {});

/// Convenience overload with P1-interpolated nodal source data.
VISolution solve_obstacle(const TriMesh& mesh, const BilinearCoeffs& coeffs,
                          const ScalarField& f_nodal, const ScalarField& phi,
                          const PdasOptions& opt = {});

/// Independent reference solver: projected gradient on the energy
/// 1/2 a(y,y) - (f,y) over {y <= phi}. Requires d = 0 and at most 200 nodes;
/// intended purely as a test oracle.
VISolution oracle_small(const TriMesh& mesh, const BilinearCoeffs& coeffs,
                        const ScalarField& load, const ScalarField& phi);

/// Triangles whose three vertices are all active (conservative elementwise
/// indicator for the active-set integrals).
std::vector<int> active_set_triangles(const VISolution& sol, const TriMesh& mesh);

}  // namespace vishape
