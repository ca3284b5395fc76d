#pragma once

// Bundles coefficients, data fields and solver knobs of one tracking-type
// obstacle problem, plus the state-solve and objective helpers shared by the
// sensitivity code, the optimizer and the CLI.

#include "vishape/fem.hpp"
#include "vishape/fields.hpp"
#include "vishape/mesh.hpp"
#include "vishape/vi.hpp"

namespace vishape {

enum class AdjointMode { paper_exact, limit };

struct ProblemData {
  BilinearCoeffs coeffs;
  SourceTerm source;
  FieldPtr obstacle;   // phi, needs an exact gradient
  FieldPtr target;     // ybar, needs an exact gradient
  double c = 100.0;
  double nu = 0.0;
  double vi_tol = 1e-10;
  int vi_max_iter = 60;
  AdjointMode adjoint_mode = AdjointMode::limit;

  PdasOptions pdas() const { return {c, vi_tol, vi_max_iter}; }
};

VISolution solve_state(const ProblemData& prob, const TriMesh& mesh);

/// Tracking misfit 1/2 int (y - ybar)^2 dx.
double tracking_value(const ProblemData& prob, const TriMesh& mesh, const ScalarField& y);

/// Full objective: tracking + nu * interface length.
double objective_value(const ProblemData& prob, const TriMesh& mesh, const ScalarField& y);

}  // namespace vishape
