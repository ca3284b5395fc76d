#pragma once

// Adjoint equation of the tracking objective under the max-reformulated
// obstacle constraint, and the Lagrangian evaluation used by the
// finite-difference oracle. Two adjoint realizations are offered:
//
//   paper_exact:  a(yt, v) - c m_A(yt, v) = (y - ybar, yt)  for all yt,
//                 with m_A the mass form restricted to active triangles;
//   limit:        a(yt, v) = (y - ybar, yt) on inactive directions with
//                 v pinned to zero on active nodes (the c -> infinity
//                 object; default, and the one the descent loop uses).

#include "vishape/problem.hpp"

namespace vishape {

struct AdjointError : std::runtime_error {
  AdjointError(const std::string& msg, double eig) : std::runtime_error(msg), smallest_eigenvalue(eig) {}
  double smallest_eigenvalue = 0.0;
};

struct AdjointSolution {
  ScalarField v;
  double residual = 0.0;
  AdjointMode mode = AdjointMode::limit;
};

AdjointSolution solve_adjoint(const ProblemData& prob, const TriMesh& mesh, const VISolution& sol,
                              AdjointMode mode);

AdjointSolution solve_adjoint(const ProblemData& prob, const TriMesh& mesh, const VISolution& sol);

/// Value of the full Lagrangian
///   1/2 int (y - ybar)^2 + a(y,v) - (f,v) + (max(0, lambda + c(y - phi)), v)
///   + nu * interface length,
/// with the multiplier term paired through the lumped nodal masses. At a
/// converged state the constraint block cancels and the value equals the
/// plain objective for every v.
double eval_lagrangian(const ProblemData& prob, const TriMesh& mesh, const ScalarField& y,
                       const ScalarField& v, const ScalarField& lambda);

/// Max over admissible test directions of the adjoint-equation residual
/// (y - ybar, yt) - a(yt, v) + c m_A(yt, v). In limit mode the max runs over
/// inactive directions only.
double adjoint_stationarity_residual(const ProblemData& prob, const TriMesh& mesh,
                                     const VISolution& sol, const AdjointSolution& adj);

/// Max over admissible test directions of the state-equation residual
/// a(y, p) + (max(0, lambda + c(y - phi)), p) - (f, p).
double state_stationarity_residual(const ProblemData& prob, const TriMesh& mesh,
                                   const VISolution& sol);

}  // namespace vishape
