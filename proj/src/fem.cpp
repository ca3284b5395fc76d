#include "vishape/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <cstdio>
#include <ostream>

namespace vishape {

void BilinearCoeffs::validate() const {
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-14 * (1.0 + a.cwiseAbs().maxCoeff())) {
    throw FemError("coefficients: diffusion matrix a must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw FemError("coefficients: diffusion matrix a must be positive definite");
  }
  if (b < 0.0) {
    throw FemError("coefficients: weak maximum principle condition violated (b must be >= 0)");
  }
  if (!a.allFinite() || !d.allFinite() || !std::isfinite(b)) {
    throw FemError("coefficients: non-finite entry");
  }
}

ElementGeom element_geometry(const TriMesh& mesh, int t) {
  ElementGeom g;
  g.v = mesh.triangles[static_cast<std::size_t>(t)];
  const Vec2& p0 = mesh.nodes[static_cast<std::size_t>(g.v[0])];
  const Vec2& p1 = mesh.nodes[static_cast<std::size_t>(g.v[1])];
  const Vec2& p2 = mesh.nodes[static_cast<std::size_t>(g.v[2])];
  g.area = 0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) - (p1.y() - p0.y()) * (p2.x() - p0.x()));
  const double s = 1.0 / (2.0 * g.area);
  g.grad[0] = s * Vec2(p1.y() - p2.y(), p2.x() - p1.x());
  g.grad[1] = s * Vec2(p2.y() - p0.y(), p0.x() - p2.x());
  g.grad[2] = s * Vec2(p0.y() - p1.y(), p1.x() - p0.x());
  return g;
}

SparseMat assemble_bilinear(const TriMesh& mesh, const BilinearCoeffs& coeffs) {
  coeffs.validate();
  const int n = mesh.node_count();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(9 * mesh.triangle_count()));

  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeom g = element_geometry(mesh, t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        // row = test i, column = trial j
        double val = g.area * g.grad[j].dot(coeffs.a * g.grad[i]);
        val += (g.area / 3.0) * (coeffs.d.dot(g.grad[j]) + coeffs.d.dot(g.grad[i]));
        if (i == j) val += coeffs.b * g.area / 3.0;   // vertex-rule reaction term
        trips.emplace_back(g.v[i], g.v[j], val);
      }
    }
  }
  SparseMat A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

namespace {

SparseMat mass_from_mask(const TriMesh& mesh, const std::vector<char>& marked) {
  const int n = mesh.node_count();
  std::vector<Eigen::Triplet<double>> trips;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (!marked[static_cast<std::size_t>(t)]) continue;
    const ElementGeom g = element_geometry(mesh, t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        trips.emplace_back(g.v[i], g.v[j], g.area / 12.0 * (i == j ? 2.0 : 1.0));
      }
    }
  }
  SparseMat M(n, n);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

}  // namespace

SparseMat assemble_mass(const TriMesh& mesh) {
  return mass_from_mask(mesh, std::vector<char>(static_cast<std::size_t>(mesh.triangle_count()), 1));
}

SparseMat assemble_mass_indicator(const TriMesh& mesh, const std::vector<int>& marked_triangles) {
  std::vector<char> mask(static_cast<std::size_t>(mesh.triangle_count()), 0);
  for (int t : marked_triangles) {
    if (t < 0 || t >= mesh.triangle_count()) throw FemError("mass_indicator: triangle id out of range");
    mask[static_cast<std::size_t>(t)] = 1;
  }
  return mass_from_mask(mesh, mask);
}

ScalarField assemble_load(const TriMesh& mesh, const ScalarField& f_nodal) {
  if (f_nodal.size() != mesh.node_count()) throw FemError("assemble_load: field size mismatch");
  ScalarField out = ScalarField::Zero(mesh.node_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeom g = element_geometry(mesh, t);
    for (int i = 0; i < 3; ++i) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) s += (i == j ? 2.0 : 1.0) * f_nodal[g.v[j]];
      out[g.v[i]] += g.area / 12.0 * s;
    }
  }
  return out;
}

ScalarField assemble_load_piecewise(const TriMesh& mesh, double f_interior, double f_exterior) {
  ScalarField out = ScalarField::Zero(mesh.node_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeom g = element_geometry(mesh, t);
    const double f =
        mesh.subdomain[static_cast<std::size_t>(t)] == Subdomain::interior ? f_interior : f_exterior;
    for (int i = 0; i < 3; ++i) out[g.v[i]] += f * g.area / 3.0;
  }
  return out;
}

ScalarField lumped_mass(const TriMesh& mesh) {
  ScalarField out = ScalarField::Zero(mesh.node_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeom g = element_geometry(mesh, t);
    for (int i = 0; i < 3; ++i) out[g.v[i]] += g.area / 3.0;
  }
  return out;
}

std::vector<int> outer_dirichlet_nodes(const TriMesh& mesh) {
  std::vector<int> ids;
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (mesh.node_flags[static_cast<std::size_t>(i)] == NodeFlag::fixed_outer) ids.push_back(i);
  }
  return ids;
}

ReducedSystem reduce_system(const SparseMat& A, const ScalarField& rhs,
                            const std::vector<int>& fixed_nodes, const ScalarField& fixed_values) {
  const int n = static_cast<int>(A.rows());
  if (rhs.size() != n) throw FemError("reduce_system: rhs size mismatch");
  if (static_cast<int>(fixed_nodes.size()) != fixed_values.size()) {
    throw FemError("reduce_system: fixed list/value size mismatch");
  }

  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  ScalarField xc = ScalarField::Zero(n);
  std::vector<char> is_fixed(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < fixed_nodes.size(); ++k) {
    const int id = fixed_nodes[k];
    if (id < 0 || id >= n) throw FemError("reduce_system: fixed node out of range");
    is_fixed[static_cast<std::size_t>(id)] = 1;
    xc[id] = fixed_values[static_cast<Eigen::Index>(k)];
  }

  ReducedSystem red;
  for (int i = 0; i < n; ++i) {
    if (!is_fixed[static_cast<std::size_t>(i)]) {
      pos[static_cast<std::size_t>(i)] = static_cast<int>(red.free_ids.size());
      red.free_ids.push_back(i);
    }
  }

  const int nf = static_cast<int>(red.free_ids.size());
  red.rhs = ScalarField::Zero(nf);
  for (int k = 0; k < nf; ++k) red.rhs[k] = rhs[red.free_ids[static_cast<std::size_t>(k)]];

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(A.nonZeros()));
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(A, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      if (is_fixed[static_cast<std::size_t>(r)]) continue;
      if (is_fixed[static_cast<std::size_t>(c)]) {
        red.rhs[pos[static_cast<std::size_t>(r)]] -= it.value() * xc[c];
      } else {
        trips.emplace_back(pos[static_cast<std::size_t>(r)], pos[static_cast<std::size_t>(c)],
                           it.value());
      }
    }
  }
  red.A.resize(nf, nf);
  red.A.setFromTriplets(trips.begin(), trips.end());
  return red;
}

namespace {

bool is_symmetric(const SparseMat& A) {
  SparseMat D = SparseMat(A.transpose()) - A;
  return D.coeffs().size() == 0 ||
         D.coeffs().cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + A.coeffs().cwiseAbs().maxCoeff());
}

}  // namespace

ScalarField solve_constrained(const SparseMat& A, const ScalarField& rhs,
                              const std::vector<int>& fixed_nodes, const ScalarField& fixed_values) {
  ReducedSystem red = reduce_system(A, rhs, fixed_nodes, fixed_values);

  ScalarField xf;
  bool solved = false;
  const bool sym = is_symmetric(red.A);
  if (sym) {
    Eigen::SimplicialLDLT<SparseMat> ldlt(red.A);
    if (ldlt.info() == Eigen::Success) {
      xf = ldlt.solve(red.rhs);
      solved = ldlt.info() == Eigen::Success;
    }
  }
  if (!solved) {
    Eigen::SparseLU<SparseMat> lu(red.A);
    if (lu.info() == Eigen::Success) {
      xf = lu.solve(red.rhs);
      solved = lu.info() == Eigen::Success;
    }
  }
  if (!solved && sym) {
    Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper> cg(red.A);
    cg.setTolerance(1e-14);
    cg.setMaxIterations(20000);
    xf = cg.solve(red.rhs);
    solved = cg.info() == Eigen::Success;
  }
  if (!solved) throw FemError("solve_constrained: singular system");

  const double res = (red.A * xf - red.rhs).norm();
  const double scale = red.rhs.norm() + red.A.coeffs().cwiseAbs().maxCoeff() * xf.norm();
  if (!(res <= 1e-10 * (1.0 + scale))) {
    throw FemError("solve_constrained: residual " + std::to_string(res) + " too large");
  }

  ScalarField x = ScalarField::Zero(A.rows());
  for (std::size_t k = 0; k < fixed_nodes.size(); ++k) {
    x[fixed_nodes[k]] = fixed_values[static_cast<Eigen::Index>(k)];
  }
  for (std::size_t k = 0; k < red.free_ids.size(); ++k) {
    x[red.free_ids[k]] = xf[static_cast<Eigen::Index>(k)];
  }
  return x;
}

ScalarField solve_dirichlet(const SparseMat& A, const ScalarField& rhs, const TriMesh& mesh) {
  const std::vector<int> fixed = outer_dirichlet_nodes(mesh);
  return solve_constrained(A, rhs, fixed, ScalarField::Zero(static_cast<Eigen::Index>(fixed.size())));
}

double smallest_eigenvalue_estimate(const SparseMat& A, int iters) {
  Eigen::SparseLU<SparseMat> lu(A);
  if (lu.info() != Eigen::Success) return 0.0;   // numerically singular
  ScalarField x = ScalarField::Constant(A.rows(), 1.0);
  x += 1e-3 * ScalarField::LinSpaced(A.rows(), 0.0, 1.0);
  x.normalize();
  for (int k = 0; k < iters; ++k) {
    x = lu.solve(x);
    const double nrm = x.norm();
    if (!(nrm > 0.0) || !x.allFinite()) return 0.0;
    x /= nrm;
  }
  return x.dot(A * x);
}

void write_matrix_coordinate(const SparseMat& A, std::ostream& os) {
  char buf[64];
  os << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << "\n";
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(A, col); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%.17g", it.value());
      os << it.row() << ' ' << it.col() << ' ' << buf << "\n";
    }
  }
}

}  // namespace vishape
