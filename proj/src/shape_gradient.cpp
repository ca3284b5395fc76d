#include "vishape/shape_gradient.hpp"

#include <algorithm>
#include <cmath>

namespace vishape {

namespace {

// int_K (P1 u)(P1 w) dx from nodal values on one element.
double p1_product_integral(const ElementGeom& g, const ScalarField& u, const ScalarField& w) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) s += (i == j ? 2.0 : 1.0) * u[g.v[i]] * w[g.v[j]];
  }
  return g.area / 12.0 * s;
}

VectorField zero_field(int n) { return VectorField(static_cast<std::size_t>(n), Vec2::Zero()); }

void add_scaled(VectorField& dst, const VectorField& src, double s) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

struct CommonData {
  ScalarField ybar, phi, f_nodal;
  std::vector<Vec2> grad_ybar, grad_phi, grad_f;
  ScalarField mass_e;    // M (y - ybar)
  ScalarField mass_v;    // M v
  std::vector<char> triangle_active;
};

CommonData gather(const ProblemData& prob, const TriMesh& mesh, const VISolution& sol,
                  const AdjointSolution& adj) {
  CommonData d;
  d.ybar = sample_values(*prob.target, mesh);
  d.phi = sample_values(*prob.obstacle, mesh);
  d.grad_ybar = sample_gradients(*prob.target, mesh);
  d.grad_phi = sample_gradients(*prob.obstacle, mesh);
  if (prob.source.kind == SourceTerm::Kind::analytic) {
    d.f_nodal = sample_values(*prob.source.field, mesh);
    d.grad_f = sample_gradients(*prob.source.field, mesh);
  } else {
    d.f_nodal = ScalarField::Zero(mesh.node_count());
  }
  const SparseMat M = assemble_mass(mesh);
  d.mass_e = M * (sol.y - d.ybar);
  d.mass_v = M * adj.v;
  d.triangle_active.assign(static_cast<std::size_t>(mesh.triangle_count()), 0);
  for (int t : active_set_triangles(sol, mesh)) d.triangle_active[static_cast<std::size_t>(t)] = 1;
  return d;
}

void zero_fixed_outer(VectorField& g, const TriMesh& mesh) {
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (mesh.node_flags[static_cast<std::size_t>(i)] == NodeFlag::fixed_outer) {
      g[static_cast<std::size_t>(i)].setZero();
    }
  }
}

}  // namespace

VectorField divergence_covector(const TriMesh& mesh, const std::vector<double>& element_values) {
  if (static_cast<int>(element_values.size()) != mesh.triangle_count()) {
    throw std::invalid_argument("divergence_covector: one value per triangle required");
  }
  VectorField out = zero_field(mesh.node_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeom g = element_geometry(mesh, t);
    // div V on K is sum_n grad(hat_n) . V_n, so d/dV_n = grad(hat_n).
    for (int n = 0; n < 3; ++n) {
      out[static_cast<std::size_t>(g.v[n])] += element_values[static_cast<std::size_t>(t)] * g.grad[n];
    }
  }
  return out;
}

ShapeGradient assemble_shape_gradient(const ProblemData& prob, const TriMesh& mesh,
                                      const VISolution& sol, const AdjointSolution& adj) {
  const int n = mesh.node_count();
  const CommonData data = gather(prob, mesh, sol, adj);
  const ScalarField& y = sol.y;
  const ScalarField& v = adj.v;
  const Eigen::Matrix2d A = prob.coeffs.a;
  const Vec2 dvec = prob.coeffs.d;
  const double b = prob.coeffs.b;
  const ScalarField e = y - data.ybar;

  ShapeGradient out;
  out.parts.divergence = zero_field(n);
  out.parts.target_transport = zero_field(n);
  out.parts.source_transport = zero_field(n);
  out.parts.bilinear_correction = zero_field(n);
  out.parts.active_set = zero_field(n);
  out.parts.perimeter = zero_field(n);

  for (int i = 0; i < n; ++i) {
    out.parts.target_transport[static_cast<std::size_t>(i)] =
        -data.mass_e[i] * data.grad_ybar[static_cast<std::size_t>(i)];
    if (prob.source.kind == SourceTerm::Kind::analytic) {
      out.parts.source_transport[static_cast<std::size_t>(i)] =
          data.mass_v[i] * data.grad_f[static_cast<std::size_t>(i)];
    }
  }

  std::vector<double> bracket(static_cast<std::size_t>(mesh.triangle_count()), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeom g = element_geometry(mesh, t);

    Vec2 grad_y = Vec2::Zero(), grad_v = Vec2::Zero();
    double sum_y = 0.0, sum_v = 0.0, dot_yv = 0.0;
    for (int i = 0; i < 3; ++i) {
      grad_y += y[g.v[i]] * g.grad[i];
      grad_v += v[g.v[i]] * g.grad[i];
      sum_y += y[g.v[i]];
      sum_v += v[g.v[i]];
      dot_yv += y[g.v[i]] * v[g.v[i]];
    }

    // Bracket integral over K, quadrature matched to the assembled forms:
    // exact for the tracking, diffusion, first-order and source pieces,
    // vertex rule for the reaction piece.
    double bk = 0.5 * p1_product_integral(g, e, e);
    bk -= g.area * grad_y.dot(A * grad_v);
    bk -= g.area / 3.0 * (dvec.dot(grad_y) * sum_v + dvec.dot(grad_v) * sum_y);
    bk -= b * g.area / 3.0 * dot_yv;
    bk += prob.source.element_fv_integral(mesh, g, t, v, data.f_nodal);
    bracket[static_cast<std::size_t>(t)] = bk;

    // Convection-of-gradient corrections; DV^T dependence is linear with
    // d(DV^T w)_i / dV_{n,m} = grad(hat_n)_i w_m.
    const Vec2 a_grad_v = A * grad_v;
    const Vec2 at_grad_y = A.transpose() * grad_y;
    for (int nn = 0; nn < 3; ++nn) {
      Vec2 contrib = Vec2::Zero();
      contrib += g.area * (g.grad[nn].dot(a_grad_v)) * grad_y;
      contrib += g.area * (g.grad[nn].dot(at_grad_y)) * grad_v;
      const double dn = g.grad[nn].dot(dvec);
      contrib += g.area / 3.0 * sum_v * dn * grad_y;
      contrib += g.area / 3.0 * sum_y * dn * grad_v;
      out.parts.bilinear_correction[static_cast<std::size_t>(g.v[nn])] += contrib;
    }

    if (data.triangle_active[static_cast<std::size_t>(t)]) {
      // int_K (phi - ybar) I_h(grad(phi).V): exact P1 x P1 product.
      for (int i = 0; i < 3; ++i) {
        double w = 0.0;
        for (int j = 0; j < 3; ++j) {
          w += (i == j ? 2.0 : 1.0) * (data.phi[g.v[j]] - data.ybar[g.v[j]]);
        }
        out.parts.active_set[static_cast<std::size_t>(g.v[i])] +=
            g.area / 12.0 * w * data.grad_phi[static_cast<std::size_t>(g.v[i])];
      }
    }
  }
  out.parts.divergence = divergence_covector(mesh, bracket);
  out.parts.perimeter = perimeter_gradient(mesh);

  out.g = zero_field(n);
  add_scaled(out.g, out.parts.divergence, 1.0);
  add_scaled(out.g, out.parts.target_transport, 1.0);
  add_scaled(out.g, out.parts.source_transport, 1.0);
  add_scaled(out.g, out.parts.bilinear_correction, 1.0);
  add_scaled(out.g, out.parts.active_set, 1.0);
  add_scaled(out.g, out.parts.perimeter, prob.nu);
  zero_fixed_outer(out.g, mesh);
  return out;
}

double pairing(const VectorField& g, const VectorField& V) {
  if (g.size() != V.size()) throw std::invalid_argument("pairing: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i].dot(V[i]);
  return s;
}

double directional_semiderivative(const ShapeGradient& g, const VectorField& V) {
  return pairing(g.g, V);
}

ShapeGradient laplacian_shape_gradient(const ProblemData& prob, const TriMesh& mesh,
                                       const VISolution& sol, const AdjointSolution& adj) {
  if ((prob.coeffs.a - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() != 0.0 ||
      prob.coeffs.d.norm() != 0.0 || prob.coeffs.b != 0.0) {
    throw std::invalid_argument("laplacian_shape_gradient: requires a = I, d = 0, b = 0");
  }
  const int n = mesh.node_count();
  const CommonData data = gather(prob, mesh, sol, adj);
  const ScalarField e = sol.y - data.ybar;

  ShapeGradient out;
  out.parts.divergence = zero_field(n);
  out.parts.target_transport = zero_field(n);
  out.parts.source_transport = zero_field(n);
  out.parts.bilinear_correction = zero_field(n);
  out.parts.active_set = zero_field(n);
  out.parts.perimeter = perimeter_gradient(mesh);

  for (int i = 0; i < n; ++i) {
    out.parts.target_transport[static_cast<std::size_t>(i)] =
        -data.mass_e[i] * data.grad_ybar[static_cast<std::size_t>(i)];
    if (prob.source.kind == SourceTerm::Kind::analytic) {
      out.parts.source_transport[static_cast<std::size_t>(i)] =
          data.mass_v[i] * data.grad_f[static_cast<std::size_t>(i)];
    }
  }

  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeom g = element_geometry(mesh, t);
    Vec2 grad_y = Vec2::Zero(), grad_v = Vec2::Zero();
    for (int i = 0; i < 3; ++i) {
      grad_y += sol.y[g.v[i]] * g.grad[i];
      grad_v += adj.v[g.v[i]] * g.grad[i];
    }

    double bk = 0.5 * p1_product_integral(g, e, e);
    bk -= g.area * grad_y.dot(grad_v);
    bk += prob.source.element_fv_integral(mesh, g, t, adj.v, data.f_nodal);
    for (int nn = 0; nn < 3; ++nn) {
      out.parts.divergence[static_cast<std::size_t>(g.v[nn])] += bk * g.grad[nn];
      // grad y^T (DV + DV^T) grad v, differentiated in the nodal V values
      out.parts.bilinear_correction[static_cast<std::size_t>(g.v[nn])] +=
          g.area * (g.grad[nn].dot(grad_v) * grad_y + g.grad[nn].dot(grad_y) * grad_v);
    }

    if (data.triangle_active[static_cast<std::size_t>(t)]) {
      for (int i = 0; i < 3; ++i) {
        double w = 0.0;
        for (int j = 0; j < 3; ++j) {
          w += (i == j ? 2.0 : 1.0) * (data.phi[g.v[j]] - data.ybar[g.v[j]]);
        }
        out.parts.active_set[static_cast<std::size_t>(g.v[i])] +=
            g.area / 12.0 * w * data.grad_phi[static_cast<std::size_t>(g.v[i])];
      }
    }
  }

  out.g = zero_field(n);
  add_scaled(out.g, out.parts.divergence, 1.0);
  add_scaled(out.g, out.parts.target_transport, 1.0);
  add_scaled(out.g, out.parts.source_transport, 1.0);
  add_scaled(out.g, out.parts.bilinear_correction, 1.0);
  add_scaled(out.g, out.parts.active_set, 1.0);
  add_scaled(out.g, out.parts.perimeter, prob.nu);
  zero_fixed_outer(out.g, mesh);
  return out;
}

FdCheckResult fd_check_shape_gradient(const ProblemData& prob, const TriMesh& mesh,
                                      const VectorField& V, std::span<const double> t_steps) {
  FdCheckResult res;

  const VISolution sol0 = solve_state(prob, mesh);
  const AdjointSolution adj0 = solve_adjoint(prob, mesh, sol0);
  const ShapeGradient grad = assemble_shape_gradient(prob, mesh, sol0, adj0);
  res.pairing = directional_semiderivative(grad, V);
  const double lag0 = eval_lagrangian(prob, mesh, sol0.y, adj0.v, sol0.lambda);

  for (double t : t_steps) {
    TriMesh moved;
    bool ok = false;
    for (int shrink = 0; shrink < 8 && !ok; ++shrink) {
      try {
        moved = deform(mesh, {V, t});
        ok = true;
      } catch (const DeformError&) {
        t *= 0.5;
        res.any_step_shrunk = true;
      }
    }
    if (!ok) throw DeformError(DeformError::Kind::element_inversion,
                               "fd_check_shape_gradient: no valid deformation step");

    const VISolution sol_t = solve_state(prob, moved);
    const AdjointSolution adj_t = solve_adjoint(prob, moved, sol_t);
    if (sol_t.active_nodes != sol0.active_nodes) res.active_set_stable = false;

    const double lag_t = eval_lagrangian(prob, moved, sol_t.y, adj_t.v, sol_t.lambda);
    const double quotient = (lag_t - lag0) / t;
    res.steps.push_back(t);
    res.quotients.push_back(quotient);
    res.errors.push_back(std::abs(quotient - res.pairing));
  }

  // Least-squares fit of log10(err) against log10(t); floor protects the
  // fully converged case where the error sits at rounding level.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const int m = static_cast<int>(res.steps.size());
  for (int i = 0; i < m; ++i) {
    const double x = std::log10(res.steps[static_cast<std::size_t>(i)]);
    const double yv = std::log10(std::max(res.errors[static_cast<std::size_t>(i)], 1e-16));
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
  }
  res.slope = m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
  res.terminal_relative_error = res.errors.empty()
                                    ? 0.0
                                    : res.errors.back() / (1.0 + std::abs(res.pairing));
  return res;
}

}  // namespace vishape
