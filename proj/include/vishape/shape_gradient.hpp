#pragma once

// Assembly of the one-sided shape derivative of the full Lagrangian as a
// nodal covector g, so that <g, V> equals d/dt of the objective under the
// node motion x + tV at t = 0+ (state and adjoint held at their solves).
//
// The pairing is built exactly from element loops, never by perturb-and-
// difference; the finite-difference path below exists only as an oracle.
//
// Parts, with v the adjoint of solve_adjoint (sign convention
// a(yt, v) = (y - ybar, yt) on inactive directions):
//   divergence:            div(V) [ 1/2 (y - ybar)^2 - chi(y,v) + f v ]
//   target_transport:      -(y - ybar) grad(ybar).V
//   source_transport:      + v grad(f).V            (analytic sources only)
//   bilinear_correction:   + sum_ij a_ij [ (DV^T grad y)_i dv_j
//                                          + dy_i (DV^T grad v)_j ]
//                          + sum_i d_i [ (DV^T grad y)_i v + y (DV^T grad v)_i ]
//   active_set:            + (phi - ybar) grad(phi).V on fully active triangles
//   perimeter:             + nu * d(interface length)
// with chi the full bilinear-form integrand and DV the elementwise P1
// Jacobian of V. All data fields enter through their P1 interpolants, which
// keeps the assembled pairing the exact derivative of the discrete
// functional wherever the discrete active set is locally stable.

#include "vishape/adjoint.hpp"
#include "vishape/problem.hpp"

namespace vishape {

struct ShapeGradientParts {
  VectorField divergence;
  VectorField target_transport;
  VectorField source_transport;
  VectorField bilinear_correction;
  VectorField active_set;
  VectorField perimeter;
};

struct ShapeGradient {
  VectorField g;              // total; zero at fixed outer nodes
  ShapeGradientParts parts;   // raw breakdown, not boundary-filtered
};

ShapeGradient assemble_shape_gradient(const ProblemData& prob, const TriMesh& mesh,
                                      const VISolution& sol, const AdjointSolution& adj);

/// <g, V>; V must vanish at fixed outer nodes.
double directional_semiderivative(const ShapeGradient& g, const VectorField& V);

double pairing(const VectorField& g, const VectorField& V);

/// Covector of V -> sum_K b_K int_K div V dx for prescribed element values
/// b_K. The divergence part of the gradient is this functional applied to
/// the element integrals of the bracket; with b_K = 1 the pairing reproduces
/// int div V dx exactly.
VectorField divergence_covector(const TriMesh& mesh, const std::vector<double>& element_values);

/// Hand-coded assembly for the pure Laplacian case (a = I, d = 0, b = 0):
///   div(V)[ 1/2 (y - ybar)^2 - grad y . grad v + f v ]
///   + grad y^T (DV + DV^T) grad v  - (y - ybar) grad(ybar).V + v grad(f).V
///   + active-set and perimeter terms.
/// Written as an independent code path to cross-check the general assembly.
ShapeGradient laplacian_shape_gradient(const ProblemData& prob, const TriMesh& mesh,
                                       const VISolution& sol, const AdjointSolution& adj);

struct FdCheckResult {
  double pairing = 0.0;              // <g, V> on the base mesh
  std::vector<double> steps;         // actually used steps (shrunk on failure)
  std::vector<double> quotients;     // (L(t) - L(0)) / t
  std::vector<double> errors;        // |quotient - pairing|
  double slope = 0.0;                // fitted log-log decay rate
  double terminal_relative_error = 0.0;
  bool active_set_stable = true;     // same discrete active set at every t
  bool any_step_shrunk = false;
};

/// Re-solves state and adjoint on deform(mesh, V, t) for each step, compares
/// the difference quotient of the full Lagrangian against <g, V>.
FdCheckResult fd_check_shape_gradient(const ProblemData& prob, const TriMesh& mesh,
                                      const VectorField& V, std::span<const double> t_steps);

}  // namespace vishape
