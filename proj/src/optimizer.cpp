#include "vishape/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace vishape {

void OptConfig::validate() const {
  if (max_outer_iters < 0) throw OptimizerError("optimizer: max_outer_iters must be >= 0");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw OptimizerError("optimizer: armijo_c1 must be in (0,1)");
  if (!(step_init > 0.0)) throw OptimizerError("optimizer: step_init must be positive");
  if (!(step_shrink > 0.0 && step_shrink < 1.0)) throw OptimizerError("optimizer: step_shrink must be in (0,1)");
  if (!(grad_tol > 0.0)) throw OptimizerError("optimizer: grad_tol must be positive");
  if (!(quality_floor > 0.0)) throw OptimizerError("optimizer: quality_floor must be positive");
  if (!(riesz.lame_mu > 0.0)) throw OptimizerError("optimizer: elasticity mu must be positive");
  if (riesz.lame_lambda < 0.0) throw OptimizerError("optimizer: elasticity lambda must be >= 0");
}

void write_trace_csv(const OptTrace& trace, std::ostream& os) {
  os << "iter,J,J_track,J_reg,active_count,step,stationarity,mesh_quality\n";
  char buf[256];
  for (const OptRecord& r : trace.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g\n", r.iter,
                  r.objective, r.tracking, r.regularization, r.active_count, r.step,
                  r.stationarity, r.quality);
    os << buf;
  }
}

SparseMat assemble_riesz_operator(const TriMesh& mesh, const RieszSpec& riesz) {
  const int n = mesh.node_count();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(36 * mesh.triangle_count()));

  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeom g = element_geometry(mesh, t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (riesz.kind == RieszKind::h1) {
          // componentwise gradient inner product
          const double val = g.area * g.grad[i].dot(g.grad[j]);
          trips.emplace_back(2 * g.v[i], 2 * g.v[j], val);
          trips.emplace_back(2 * g.v[i] + 1, 2 * g.v[j] + 1, val);
        } else {
          for (int m = 0; m < 2; ++m) {
            for (int q = 0; q < 2; ++q) {
              double val = riesz.lame_mu * ((m == q ? g.grad[i].dot(g.grad[j]) : 0.0) +
                                            g.grad[i][q] * g.grad[j][m]);
              val += riesz.lame_lambda * g.grad[i][m] * g.grad[j][q];
              trips.emplace_back(2 * g.v[i] + m, 2 * g.v[j] + q, g.area * val);
            }
          }
        }
      }
    }
  }
  SparseMat R(2 * n, 2 * n);
  R.setFromTriplets(trips.begin(), trips.end());
  return R;
}

VectorField descent_direction(const TriMesh& mesh, const ShapeGradient& g, const RieszSpec& riesz) {
  const int n = mesh.node_count();
  const SparseMat R = assemble_riesz_operator(mesh, riesz);

  ScalarField rhs(2 * n);
  for (int i = 0; i < n; ++i) {
    rhs[2 * i] = -g.g[static_cast<std::size_t>(i)].x();
    rhs[2 * i + 1] = -g.g[static_cast<std::size_t>(i)].y();
  }
  std::vector<int> fixed;
  for (int i : outer_dirichlet_nodes(mesh)) {
    fixed.push_back(2 * i);
    fixed.push_back(2 * i + 1);
  }
  const ScalarField x =
      solve_constrained(R, rhs, fixed, ScalarField::Zero(static_cast<Eigen::Index>(fixed.size())));

  VectorField W(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) W[static_cast<std::size_t>(i)] = Vec2(x[2 * i], x[2 * i + 1]);
  return W;
}

double stationarity_measure(const TriMesh& mesh, const ShapeGradient& g, const RieszSpec& riesz) {
  const VectorField W = descent_direction(mesh, g, riesz);
  return std::sqrt(std::max(0.0, -pairing(g.g, W)));
}

LineSearchResult line_search(const ProblemData& prob, const TriMesh& mesh, const VISolution& sol,
                             const ShapeGradient& g, const VectorField& W, const OptConfig& cfg) {
  const double slope = pairing(g.g, W);
  if (!(slope < 0.0)) {
    throw OptimizerError("line_search: <g, W> must be negative (got " + std::to_string(slope) + ")");
  }
  const double j0 = objective_value(prob, mesh, sol.y);

  double t = cfg.step_init;
  LineSearchResult res;
  for (int k = 0; k < 30; ++k, t *= cfg.step_shrink) {
    res.trials = k + 1;
    TriMesh moved;
    try {
      moved = deform(mesh, {W, t}, cfg.quality_floor);
    } catch (const DeformError&) {
      continue;
    }
    VISolution sol_t = solve_state(prob, moved);
    const double jt = objective_value(prob, moved, sol_t.y);
    if (jt <= j0 + cfg.armijo_c1 * t * slope) {
      res.step = t;
      res.mesh = std::move(moved);
      res.sol = std::move(sol_t);
      return res;
    }
  }
  throw OptimizerError("line_search: no admissible step after 30 shrinks (J0 = " +
                       std::to_string(j0) + ", slope = " + std::to_string(slope) + ")");
}

OptimizeResult optimize(const ProblemData& prob, const TriMesh& mesh0, const OptConfig& cfg) {
  cfg.validate();

  OptimizeResult out;
  out.mesh = mesh0;
  out.sol = solve_state(prob, out.mesh);

  for (int iter = 0;; ++iter) {
    const AdjointSolution adj = solve_adjoint(prob, out.mesh, out.sol);
    const ShapeGradient grad = assemble_shape_gradient(prob, out.mesh, out.sol, adj);
    const VectorField W = descent_direction(out.mesh, grad, cfg.riesz);
    const double measure = std::sqrt(std::max(0.0, -pairing(grad.g, W)));

    OptRecord rec;
    rec.iter = iter;
    rec.tracking = tracking_value(prob, out.mesh, out.sol.y);
    rec.regularization = prob.nu * interface_length(out.mesh);
    rec.objective = rec.tracking + rec.regularization;
    rec.active_count = static_cast<int>(out.sol.active_nodes.size());
    rec.stationarity = measure;
    rec.quality = mesh_quality(out.mesh);
    out.trace.records.push_back(rec);

    if (measure <= cfg.grad_tol) {
      out.converged = true;
      out.stop_reason = "stationarity measure below tolerance";
      return out;
    }
    if (iter >= cfg.max_outer_iters) {
      out.stop_reason = "outer iteration limit reached";
      return out;
    }

    LineSearchResult ls;
    try {
      ls = line_search(prob, out.mesh, out.sol, grad, W, cfg);
    } catch (const OptimizerError& err) {
      out.stop_reason = std::string("line search failed at iteration ") + std::to_string(iter) +
                        ": " + err.what();
      return out;
    }
    out.trace.records.back().step = ls.step;
    out.mesh = std::move(ls.mesh);
    out.sol = std::move(ls.sol);
  }
}

}  // namespace vishape
