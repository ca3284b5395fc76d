#pragma once

// Planar triangulation with a fixed outer boundary and a movable polygonal
// interface splitting the hold-all into an interior and an exterior
// subdomain. Meshes are immutable snapshots: deform() returns a new mesh.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vishape {

using Vec2 = Eigen::Vector2d;

enum class NodeFlag : std::uint8_t { free_node = 0, interface = 1, fixed_outer = 2 };
enum class Subdomain : std::uint8_t { interior = 0, exterior = 1 };
enum class EdgeMarker : std::uint8_t { interface = 1, outer = 2 };

struct BoundaryEdge {
  int a = -1, b = -1;
  EdgeMarker marker = EdgeMarker::outer;
};

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DeformError : std::runtime_error {
  enum class Kind { element_inversion, quality_collapse };
  DeformError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

struct TriMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;   // counterclockwise
  std::vector<Subdomain> subdomain;            // per triangle
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<NodeFlag> node_flags;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }

  double signed_area(int t) const;
  Vec2 centroid(int t) const;
  int interior_triangle_count() const;
  std::vector<int> interface_node_ids() const;

  /// Throws MeshError if any structural invariant fails: positive areas,
  /// consistent sizes, interface edges separating interior from exterior,
  /// closed interface polygons.
  void validate() const;
};

/// Displacement direction per node plus a step scalar; the deformed
/// configuration is x + t * V. V must vanish at fixed outer nodes.
struct Deformation {
  std::vector<Vec2> direction;
  double step = 0.0;
};

/// Unit-square hold-all with a circular interface approximated by a regular
/// n_interface-gon. n_boundary nodes (a multiple of 4, at least 8) are placed
/// on the square, corners included. Throws MeshError if the circle is not
/// strictly inside the square.
TriMesh generate_disk_in_square(int n_boundary, int n_interface, double radius,
                                Vec2 center);

/// New mesh with nodes moved by step * direction; connectivity and labels are
/// copied. Throws DeformError instead of returning a tangled or badly
/// conditioned mesh.
TriMesh deform(const TriMesh& mesh, const Deformation& d, double quality_floor = 0.2);

/// Total length of the interface polygon(s).
double interface_length(const TriMesh& mesh);

/// Exact gradient of interface_length with respect to node positions; zero at
/// non-interface nodes. Pairing with a direction V gives
/// d/dt length(id + tV) at t = 0+.
std::vector<Vec2> perimeter_gradient(const TriMesh& mesh);

/// min over triangles of 2 * inradius / circumradius (1 for equilateral,
/// 0 for degenerate).
double mesh_quality(const TriMesh& mesh);

/// Mean distance of interface nodes from the given center.
double mean_interface_radius(const TriMesh& mesh, Vec2 center);

// Plain-text mesh exchange format; layout documented in the README.
void write_mesh_text(const TriMesh& mesh, std::ostream& os);
TriMesh read_mesh_text(std::istream& is);
void write_mesh_file(const TriMesh& mesh, const std::string& path);
TriMesh read_mesh_file(const std::string& path);

/// Delaunay triangulation of a point set (Bowyer-Watson). Exposed for tests.
std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Vec2>& points);

}  // namespace vishape
