#pragma once

// P1 conforming finite elements on TriMesh: assembly of the coercive
// bilinear form (diffusion matrix a, symmetrized first-order terms d,
// reaction b), mass and load terms, Dirichlet elimination and sparse solves.

#include <iosfwd>
#include <vector>

#include <Eigen/Sparse>

#include "vishape/mesh.hpp"

namespace vishape {

using SparseMat = Eigen::SparseMatrix<double>;
using ScalarField = Eigen::VectorXd;        // one value per node
using VectorField = std::vector<Vec2>;      // one displacement per node

struct FemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Constant coefficients of the bilinear form
///   a(y,v) = int  sum_ij a_ij dy/dx_i dv/dx_j
///          + sum_i d_i (dy/dx_i v + y dv/dx_i) + b y v dx.
/// a must be symmetric positive definite and b nonnegative (sufficient
/// constant-coefficient conditions for the weak maximum principle).
struct BilinearCoeffs {
  Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
  Vec2 d = Vec2::Zero();
  double b = 0.0;

  void validate() const;   // throws FemError with a named diagnostic
};

/// Per-element P1 geometry: area and the constant hat-function gradients.
struct ElementGeom {
  std::array<int, 3> v;
  double area = 0.0;
  std::array<Vec2, 3> grad;
};

ElementGeom element_geometry(const TriMesh& mesh, int t);

/// Stiffness + first-order + reaction matrix; entry (k,l) = a(phi_l, phi_k).
/// Gradient and first-order terms use exact quadrature, the reaction term
/// uses the 3-point vertex rule (row-sum lumping).
SparseMat assemble_bilinear(const TriMesh& mesh, const BilinearCoeffs& coeffs);

/// Exact P1 mass matrix over the whole mesh.
SparseMat assemble_mass(const TriMesh& mesh);

/// Exact P1 mass matrix restricted to the marked triangles.
SparseMat assemble_mass_indicator(const TriMesh& mesh, const std::vector<int>& marked_triangles);

/// Load vector int f phi_k dx for P1-interpolated nodal data f.
ScalarField assemble_load(const TriMesh& mesh, const ScalarField& f_nodal);

/// Load vector for a source that is constant on each subdomain.
ScalarField assemble_load_piecewise(const TriMesh& mesh, double f_interior, double f_exterior);

/// Row-sum lumped mass (area/3 per incident triangle).
ScalarField lumped_mass(const TriMesh& mesh);

std::vector<int> outer_dirichlet_nodes(const TriMesh& mesh);

/// Reduced system after eliminating the listed nodes at prescribed values
/// (rows and columns dropped, right side corrected; symmetry preserved).
struct ReducedSystem {
  SparseMat A;
  ScalarField rhs;
  std::vector<int> free_ids;   // reduced index -> node id
};

ReducedSystem reduce_system(const SparseMat& A, const ScalarField& rhs,
                            const std::vector<int>& fixed_nodes,
                            const ScalarField& fixed_values);

/// Solves A x = rhs with the listed nodes pinned to the given values.
/// Direct sparse factorization first, conjugate-gradient fallback for
/// symmetric systems; throws FemError if the relative residual of the
/// constrained system exceeds 1e-10.
ScalarField solve_constrained(const SparseMat& A, const ScalarField& rhs,
                              const std::vector<int>& fixed_nodes,
                              const ScalarField& fixed_values);

/// Homogeneous Dirichlet solve: zero at every fixed outer node.
ScalarField solve_dirichlet(const SparseMat& A, const ScalarField& rhs, const TriMesh& mesh);

/// Smallest-magnitude eigenvalue estimate by inverse power iteration
/// (sign included); used for definiteness diagnostics.
double smallest_eigenvalue_estimate(const SparseMat& A, int iters = 40);

/// Coordinate (i j value) text export for debugging.
void write_matrix_coordinate(const SparseMat& A, std::ostream& os);

}  // namespace vishape
