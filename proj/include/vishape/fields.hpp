#pragma once

// Scalar data fields (obstacle, target, source) with exact gradients.
// Analytic catalog entries keep the shape-derivative transport terms free of
// numerical differentiation; MeshP1Field wraps discrete data generated on a
// reference geometry (piecewise-linear value, piecewise-constant gradient).

#include <memory>
#include <vector>

#include "vishape/fem.hpp"
#include "vishape/mesh.hpp"

namespace vishape {

class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual double value(Vec2 p) const = 0;
  virtual Vec2 gradient(Vec2 p) const = 0;
};

using FieldPtr = std::shared_ptr<const FieldSource>;

FieldPtr make_constant_field(double value);
FieldPtr make_affine_field(double a0, double ax, double ay);
/// amplitude * exp(-|p - center|^2 / (2 sigma^2))
FieldPtr make_radial_bump_field(double amplitude, Vec2 center, double sigma);
FieldPtr make_product_field(FieldPtr f1, FieldPtr f2);

/// P1 field carried by a fixed mesh snapshot; evaluation locates the
/// containing triangle (uniform-grid acceleration, deterministic
/// tie-breaking on edges).
class MeshP1Field final : public FieldSource {
 public:
  MeshP1Field(TriMesh mesh, ScalarField nodal_values);
  double value(Vec2 p) const override;
  Vec2 gradient(Vec2 p) const override;

 private:
  int locate(Vec2 p) const;

  TriMesh mesh_;
  ScalarField values_;
  std::vector<ElementGeom> geom_;
  // uniform bins over the bounding box
  Vec2 lo_, hi_;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> bins_;
};

FieldPtr make_mesh_field(TriMesh mesh, ScalarField nodal_values);

ScalarField sample_values(const FieldSource& f, const TriMesh& mesh);
std::vector<Vec2> sample_gradients(const FieldSource& f, const TriMesh& mesh);

/// Source term of the state equation: either analytic data or constants per
/// subdomain (in which case the transport gradient vanishes elementwise).
struct SourceTerm {
  enum class Kind { analytic, piecewise };
  Kind kind = Kind::piecewise;
  FieldPtr field;                              // analytic
  double f_interior = 0.0, f_exterior = 0.0;   // piecewise

  ScalarField load(const TriMesh& mesh) const;
  /// Element integrals of f * w for a P1 nodal field w, one value per element.
  double element_fv_integral(const TriMesh& mesh, const ElementGeom& g, int t,
                             const ScalarField& w, const ScalarField& f_nodal_cache) const;
};

SourceTerm analytic_source(FieldPtr f);
SourceTerm piecewise_source(double f_interior, double f_exterior);

}  // namespace vishape
