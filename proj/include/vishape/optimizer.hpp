#pragma once

// Descent loop on the interface shape: Riesz-represent the assembled
// covector in an H1 or linear-elasticity inner product, Armijo-backtrack on
// the objective with mesh-validity guards, stop on the Riesz norm of the
// gradient (the discrete first-order necessary condition).

#include "vishape/shape_gradient.hpp"

namespace vishape {

struct OptimizerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RieszKind { h1, elasticity };

struct RieszSpec {
  RieszKind kind = RieszKind::elasticity;
  double lame_mu = 1.0;
  double lame_lambda = 0.0;
};

struct OptConfig {
  int max_outer_iters = 100;
  double armijo_c1 = 1e-4;
  double step_init = 1.0;
  double step_shrink = 0.5;
  double grad_tol = 1e-6;
  double quality_floor = 0.2;
  RieszSpec riesz;

  void validate() const;
};

struct OptRecord {
  int iter = 0;
  double objective = 0.0;
  double tracking = 0.0;
  double regularization = 0.0;
  int active_count = 0;
  double step = 0.0;           // step accepted when leaving this iterate
  double stationarity = 0.0;
  double quality = 0.0;
};

struct OptTrace {
  std::vector<OptRecord> records;
};

void write_trace_csv(const OptTrace& trace, std::ostream& os);

/// Riesz matrix of the chosen inner product on the 2n-dimensional
/// deformation space (node-major blocks of two).
SparseMat assemble_riesz_operator(const TriMesh& mesh, const RieszSpec& riesz);

/// W with (W, V)_riesz = -<g, V> for all V vanishing on the fixed outer
/// boundary; then <g, W> = -(W, W)_riesz <= 0.
VectorField descent_direction(const TriMesh& mesh, const ShapeGradient& g, const RieszSpec& riesz);

/// Riesz norm of the descent direction; zero iff the discrete necessary
/// condition holds on the admissible deformation space.
double stationarity_measure(const TriMesh& mesh, const ShapeGradient& g, const RieszSpec& riesz);

struct LineSearchResult {
  double step = 0.0;
  TriMesh mesh;
  VISolution sol;
  int trials = 0;
};

/// Largest step_init * step_shrink^k satisfying the Armijo inequality on the
/// objective with the state re-solved on every candidate mesh; mesh-validity
/// and quality failures shrink the step as well.
LineSearchResult line_search(const ProblemData& prob, const TriMesh& mesh, const VISolution& sol,
                             const ShapeGradient& g, const VectorField& W, const OptConfig& cfg);

struct OptimizeResult {
  TriMesh mesh;
  VISolution sol;
  OptTrace trace;
  bool converged = false;
  std::string stop_reason;
};

OptimizeResult optimize(const ProblemData& prob, const TriMesh& mesh0, const OptConfig& cfg);

}  // namespace vishape
