#include "vishape/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace vishape {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic jitter in [-amp, amp]^2 keyed by integer indices; breaks the
// cocircular degeneracies a regular lattice would feed the Delaunay kernel.
Vec2 jitter(int i, int j, double amp) {
  const std::uint64_t h =
      splitmix64((static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) ^
                 static_cast<std::uint32_t>(j));
  const double u = static_cast<double>(h & 0xffffffffULL) / 4294967295.0;
  const double v = static_cast<double>(h >> 32) / 4294967295.0;
  return {amp * (2.0 * u - 1.0), amp * (2.0 * v - 1.0)};
}

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

double tri_signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double s0 = tri_signed_area(a, b, p);
  const double s1 = tri_signed_area(b, c, p);
  const double s2 = tri_signed_area(c, a, p);
  const double eps = -1e-13;
  return s0 >= eps && s1 >= eps && s2 >= eps;
}

}  // namespace

double TriMesh::signed_area(int t) const {
  const auto& tv = triangles[static_cast<std::size_t>(t)];
  return tri_signed_area(nodes[static_cast<std::size_t>(tv[0])],
                         nodes[static_cast<std::size_t>(tv[1])],
                         nodes[static_cast<std::size_t>(tv[2])]);
}

Vec2 TriMesh::centroid(int t) const {
  const auto& tv = triangles[static_cast<std::size_t>(t)];
  return (nodes[static_cast<std::size_t>(tv[0])] + nodes[static_cast<std::size_t>(tv[1])] +
          nodes[static_cast<std::size_t>(tv[2])]) /
         3.0;
}

int TriMesh::interior_triangle_count() const {
  int n = 0;
  for (Subdomain s : subdomain) n += (s == Subdomain::interior) ? 1 : 0;
  return n;
}

std::vector<int> TriMesh::interface_node_ids() const {
  std::vector<int> ids;
  for (int i = 0; i < node_count(); ++i) {
    if (node_flags[static_cast<std::size_t>(i)] == NodeFlag::interface) ids.push_back(i);
  }
  return ids;
}

void TriMesh::validate() const {
  if (node_flags.size() != nodes.size()) throw MeshError("validate: node_flags size mismatch");
  if (subdomain.size() != triangles.size()) throw MeshError("validate: subdomain size mismatch");

  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int v : triangles[t]) {
      if (v < 0 || v >= node_count()) throw MeshError("validate: vertex index out of range");
    }
    if (signed_area(static_cast<int>(t)) <= 0.0) {
      throw MeshError("validate: non-positive triangle area");
    }
  }

  std::unordered_map<std::uint64_t, std::vector<int>> edge_tris;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tv = triangles[t];
    for (int e = 0; e < 3; ++e) {
      edge_tris[edge_key(tv[e], tv[(e + 1) % 3])].push_back(static_cast<int>(t));
    }
  }

  std::vector<int> interface_degree(nodes.size(), 0);
  for (const BoundaryEdge& be : boundary_edges) {
    if (be.a < 0 || be.a >= node_count() || be.b < 0 || be.b >= node_count()) {
      throw MeshError("validate: boundary edge index out of range");
    }
    auto it = edge_tris.find(edge_key(be.a, be.b));
    if (it == edge_tris.end()) throw MeshError("validate: boundary edge not in triangulation");
    if (be.marker == EdgeMarker::interface) {
      if (it->second.size() != 2) throw MeshError("validate: interface edge must border 2 triangles");
      const Subdomain s0 = subdomain[static_cast<std::size_t>(it->second[0])];
      const Subdomain s1 = subdomain[static_cast<std::size_t>(it->second[1])];
      if (s0 == s1) throw MeshError("validate: interface edge does not separate subdomains");
      interface_degree[static_cast<std::size_t>(be.a)]++;
      interface_degree[static_cast<std::size_t>(be.b)]++;
    } else {
      if (it->second.size() != 1) throw MeshError("validate: outer edge must border 1 triangle");
      if (node_flags[static_cast<std::size_t>(be.a)] != NodeFlag::fixed_outer ||
          node_flags[static_cast<std::size_t>(be.b)] != NodeFlag::fixed_outer) {
        throw MeshError("validate: outer edge endpoint not flagged fixed_outer");
      }
    }
  }

  // Interface polygons are closed iff every interface node has degree 2.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (node_flags[i] == NodeFlag::interface && interface_degree[i] != 2) {
      throw MeshError("validate: interface polygon not closed at node " + std::to_string(i));
    }
    if (node_flags[i] != NodeFlag::interface && interface_degree[i] != 0) {
      throw MeshError("validate: interface edge touches non-interface node");
    }
  }

  // Non-interface shared edges must not cross a subdomain boundary.
  std::unordered_map<std::uint64_t, bool> is_interface;
  for (const BoundaryEdge& be : boundary_edges) {
    if (be.marker == EdgeMarker::interface) is_interface[edge_key(be.a, be.b)] = true;
  }
  for (const auto& [key, ts] : edge_tris) {
    if (ts.size() == 2 && !is_interface.count(key)) {
      if (subdomain[static_cast<std::size_t>(ts[0])] != subdomain[static_cast<std::size_t>(ts[1])]) {
        throw MeshError("validate: subdomain change across non-interface edge");
      }
    }
  }
}

TriMesh generate_disk_in_square(int n_boundary, int n_interface, double radius, Vec2 center) {
  if (n_boundary < 8 || n_boundary % 4 != 0) {
    throw MeshError("generate_disk_in_square: n_boundary must be a multiple of 4, >= 8");
  }
  if (n_interface < 8) throw MeshError("generate_disk_in_square: n_interface must be >= 8");
  if (!(radius > 0.0)) throw MeshError("generate_disk_in_square: radius must be positive");
  const double wall = std::min({center.x(), center.y(), 1.0 - center.x(), 1.0 - center.y()});
  if (wall <= radius) {
    throw MeshError("generate_disk_in_square: geometry infeasible, circle touches the square");
  }

  std::vector<Vec2> pts;
  std::vector<NodeFlag> flags;

  // Square boundary, corners included, walked counterclockwise from (0,0).
  const int per_side = n_boundary / 4;
  const double hb = 1.0 / per_side;
  for (int i = 0; i < per_side; ++i) pts.emplace_back(i * hb, 0.0);
  for (int i = 0; i < per_side; ++i) pts.emplace_back(1.0, i * hb);
  for (int i = 0; i < per_side; ++i) pts.emplace_back(1.0 - i * hb, 1.0);
  for (int i = 0; i < per_side; ++i) pts.emplace_back(0.0, 1.0 - i * hb);
  flags.assign(pts.size(), NodeFlag::fixed_outer);

  // Interface polygon: regular n-gon, vertices exactly on the circle.
  const int first_iface = static_cast<int>(pts.size());
  for (int j = 0; j < n_interface; ++j) {
    const double th = 2.0 * kPi * j / n_interface;
    pts.emplace_back(center.x() + radius * std::cos(th), center.y() + radius * std::sin(th));
    flags.push_back(NodeFlag::interface);
  }
  const double ell = 2.0 * radius * std::sin(kPi / n_interface);
  const double sagitta = radius * (1.0 - std::cos(kPi / n_interface));

  // Interior of the disk: staggered concentric rings plus a center node.
  const int n_rings = std::max(1, static_cast<int>(std::lround(radius / (0.866 * ell))));
  const double dr = radius / n_rings;
  for (int k = n_rings - 1; k >= 1; --k) {
    const double rho = k * dr;
    const int nk = std::max(4, static_cast<int>(std::lround(static_cast<double>(n_interface) * k / n_rings)));
    const double phase = ((n_rings - k) % 2 == 1) ? 0.5 : 0.0;
    for (int j = 0; j < nk; ++j) {
      const double th = 2.0 * kPi * (j + phase) / nk;
      Vec2 p(center.x() + rho * std::cos(th), center.y() + rho * std::sin(th));
      p += jitter(1000 + k, j, 0.04 * dr);
      pts.push_back(p);
      flags.push_back(NodeFlag::free_node);
    }
  }
  pts.push_back(center + jitter(999, 0, 0.04 * dr));
  flags.push_back(NodeFlag::free_node);

  // Collar ring just outside the interface, angularly staggered.
  const double collar_r = radius + 0.866 * ell;
  const double square_margin = 0.55 * hb;
  for (int j = 0; j < n_interface; ++j) {
    const double th = 2.0 * kPi * (j + 0.5) / n_interface;
    Vec2 p(center.x() + collar_r * std::cos(th), center.y() + collar_r * std::sin(th));
    p += jitter(2000, j, 0.03 * ell);
    if (p.x() < square_margin || p.x() > 1.0 - square_margin || p.y() < square_margin ||
        p.y() > 1.0 - square_margin) {
      continue;
    }
    pts.push_back(p);
    flags.push_back(NodeFlag::free_node);
  }

  // Hexagonal fill of the remaining exterior. Clearance bands keep every
  // interface edge a Gabriel edge, so the Delaunay pass recovers the polygon.
  const double hf = 0.5 * (ell + hb);
  const double circle_clear = 1.35 * ell + sagitta;
  const double row_h = hf * 0.8660254037844386;
  const int n_rows = static_cast<int>(1.0 / row_h) + 2;
  const int n_cols = static_cast<int>(1.0 / hf) + 2;
  for (int iy = 0; iy <= n_rows; ++iy) {
    const double y = iy * row_h;
    const double x0 = (iy % 2 == 0) ? 0.0 : 0.5 * hf;
    for (int ix = 0; ix <= n_cols; ++ix) {
      Vec2 p(x0 + ix * hf, y);
      p += jitter(ix, iy, 0.10 * hf);
      if (p.x() < square_margin || p.x() > 1.0 - square_margin || p.y() < square_margin ||
          p.y() > 1.0 - square_margin) {
        continue;
      }
      const double rho = (p - center).norm();
      if (rho < radius + circle_clear) continue;
      pts.push_back(p);
      flags.push_back(NodeFlag::free_node);
    }
  }

  TriMesh mesh;
  mesh.nodes = std::move(pts);
  mesh.node_flags = std::move(flags);
  mesh.triangles = delaunay_triangulate(mesh.nodes);

  // Orientation fix (the kernel returns CCW already; keep it cheap to assert).
  for (auto& tv : mesh.triangles) {
    if (tri_signed_area(mesh.nodes[static_cast<std::size_t>(tv[0])],
                        mesh.nodes[static_cast<std::size_t>(tv[1])],
                        mesh.nodes[static_cast<std::size_t>(tv[2])]) < 0.0) {
      std::swap(tv[1], tv[2]);
    }
  }

  std::unordered_map<std::uint64_t, std::vector<int>> edge_tris;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tv = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      edge_tris[edge_key(tv[e], tv[(e + 1) % 3])].push_back(static_cast<int>(t));
    }
  }

  std::unordered_map<std::uint64_t, bool> interface_edges;
  for (int j = 0; j < n_interface; ++j) {
    const int a = first_iface + j;
    const int b = first_iface + (j + 1) % n_interface;
    auto it = edge_tris.find(edge_key(a, b));
    if (it == edge_tris.end() || it->second.size() != 2) {
      throw MeshError("generate_disk_in_square: interface edge missing from triangulation");
    }
    interface_edges[edge_key(a, b)] = true;
    mesh.boundary_edges.push_back({a, b, EdgeMarker::interface});
  }

  // Flood fill from the triangle containing the center; interface edges act
  // as walls, which labels the two subdomains exactly.
  int seed = -1;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tv = mesh.triangles[static_cast<std::size_t>(t)];
    if (point_in_triangle(center, mesh.nodes[static_cast<std::size_t>(tv[0])],
                          mesh.nodes[static_cast<std::size_t>(tv[1])],
                          mesh.nodes[static_cast<std::size_t>(tv[2])])) {
      seed = t;
      break;
    }
  }
  if (seed < 0) throw MeshError("generate_disk_in_square: no triangle contains the center");

  mesh.subdomain.assign(mesh.triangles.size(), Subdomain::exterior);
  std::vector<int> stack{seed};
  std::vector<char> seen(mesh.triangles.size(), 0);
  seen[static_cast<std::size_t>(seed)] = 1;
  while (!stack.empty()) {
    const int t = stack.back();
    stack.pop_back();
    mesh.subdomain[static_cast<std::size_t>(t)] = Subdomain::interior;
    const auto& tv = mesh.triangles[static_cast<std::size_t>(t)];
    for (int e = 0; e < 3; ++e) {
      const std::uint64_t key = edge_key(tv[e], tv[(e + 1) % 3]);
      if (interface_edges.count(key)) continue;
      for (int t2 : edge_tris[key]) {
        if (!seen[static_cast<std::size_t>(t2)]) {
          seen[static_cast<std::size_t>(t2)] = 1;
          stack.push_back(t2);
        }
      }
    }
  }

  // Hull edges are the fixed outer boundary.
  for (const auto& [key, ts] : edge_tris) {
    if (ts.size() == 1) {
      const int a = static_cast<int>(key & 0xffffffffULL);
      const int b = static_cast<int>(key >> 32);
      if (mesh.node_flags[static_cast<std::size_t>(a)] != NodeFlag::fixed_outer ||
          mesh.node_flags[static_cast<std::size_t>(b)] != NodeFlag::fixed_outer) {
        throw MeshError("generate_disk_in_square: hull edge off the square boundary");
      }
      if (mesh.subdomain[static_cast<std::size_t>(ts[0])] == Subdomain::interior) {
        throw MeshError("generate_disk_in_square: interface polygon leaks to the hull");
      }
      mesh.boundary_edges.push_back({a, b, EdgeMarker::outer});
    }
  }

  std::sort(mesh.boundary_edges.begin(), mesh.boundary_edges.end(),
            [](const BoundaryEdge& l, const BoundaryEdge& r) {
              if (l.marker != r.marker) return l.marker < r.marker;
              return std::tie(l.a, l.b) < std::tie(r.a, r.b);
            });

  mesh.validate();
  return mesh;
}

TriMesh deform(const TriMesh& mesh, const Deformation& d, double quality_floor) {
  if (static_cast<int>(d.direction.size()) != mesh.node_count()) {
    throw std::invalid_argument("deform: direction size mismatch");
  }
  if (!(d.step >= 0.0)) throw std::invalid_argument("deform: step must be nonnegative");
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (mesh.node_flags[static_cast<std::size_t>(i)] == NodeFlag::fixed_outer &&
        d.direction[static_cast<std::size_t>(i)].norm() != 0.0) {
      throw std::invalid_argument("deform: direction must vanish at fixed outer nodes");
    }
  }

  TriMesh out = mesh;
  for (int i = 0; i < mesh.node_count(); ++i) {
    out.nodes[static_cast<std::size_t>(i)] =
        mesh.nodes[static_cast<std::size_t>(i)] + d.step * d.direction[static_cast<std::size_t>(i)];
  }

  for (int t = 0; t < out.triangle_count(); ++t) {
    if (out.signed_area(t) <= 0.0) {
      throw DeformError(DeformError::Kind::element_inversion,
                        "deform: element inversion at triangle " + std::to_string(t));
    }
  }
  const double q = mesh_quality(out);
  if (q < quality_floor) {
    throw DeformError(DeformError::Kind::quality_collapse,
                      "deform: mesh quality " + std::to_string(q) + " below floor " +
                          std::to_string(quality_floor));
  }
  return out;
}

double interface_length(const TriMesh& mesh) {
  double len = 0.0;
  for (const BoundaryEdge& be : mesh.boundary_edges) {
    if (be.marker == EdgeMarker::interface) {
      len += (mesh.nodes[static_cast<std::size_t>(be.a)] - mesh.nodes[static_cast<std::size_t>(be.b)])
                 .norm();
    }
  }
  return len;
}

std::vector<Vec2> perimeter_gradient(const TriMesh& mesh) {
  std::vector<Vec2> g(static_cast<std::size_t>(mesh.node_count()), Vec2::Zero());
  for (const BoundaryEdge& be : mesh.boundary_edges) {
    if (be.marker != EdgeMarker::interface) continue;
    const Vec2& pa = mesh.nodes[static_cast<std::size_t>(be.a)];
    const Vec2& pb = mesh.nodes[static_cast<std::size_t>(be.b)];
    const double len = (pa - pb).norm();
    if (len == 0.0) continue;
    const Vec2 u = (pa - pb) / len;
    g[static_cast<std::size_t>(be.a)] += u;
    g[static_cast<std::size_t>(be.b)] -= u;
  }
  return g;
}

double mesh_quality(const TriMesh& mesh) {
  double worst = 1.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tv = mesh.triangles[static_cast<std::size_t>(t)];
    const Vec2& p0 = mesh.nodes[static_cast<std::size_t>(tv[0])];
    const Vec2& p1 = mesh.nodes[static_cast<std::size_t>(tv[1])];
    const Vec2& p2 = mesh.nodes[static_cast<std::size_t>(tv[2])];
    const double a = (p1 - p0).norm();
    const double b = (p2 - p1).norm();
    const double c = (p0 - p2).norm();
    const double area = std::abs(tri_signed_area(p0, p1, p2));
    const double denom = (a + b + c) * a * b * c;
    const double q = denom > 0.0 ? 16.0 * area * area / denom : 0.0;
    worst = std::min(worst, q);
  }
  return worst;
}

double mean_interface_radius(const TriMesh& mesh, Vec2 center) {
  double sum = 0.0;
  int n = 0;
  for (int i : mesh.interface_node_ids()) {
    sum += (mesh.nodes[static_cast<std::size_t>(i)] - center).norm();
    ++n;
  }
  return n > 0 ? sum / n : 0.0;
}

void write_mesh_text(const TriMesh& mesh, std::ostream& os) {
  char buf[64];
  os << "vishape-mesh 1\n";
  os << "nodes " << mesh.node_count() << "\n";
  for (int i = 0; i < mesh.node_count(); ++i) {
    const Vec2& p = mesh.nodes[static_cast<std::size_t>(i)];
    std::snprintf(buf, sizeof(buf), "%.17g %.17g", p.x(), p.y());
    os << buf << ' ' << static_cast<int>(mesh.node_flags[static_cast<std::size_t>(i)]) << "\n";
  }
  os << "triangles " << mesh.triangle_count() << "\n";
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tv = mesh.triangles[static_cast<std::size_t>(t)];
    os << tv[0] << ' ' << tv[1] << ' ' << tv[2] << ' '
       << static_cast<int>(mesh.subdomain[static_cast<std::size_t>(t)]) << "\n";
  }
  os << "boundary_edges " << mesh.boundary_edges.size() << "\n";
  for (const BoundaryEdge& be : mesh.boundary_edges) {
    os << be.a << ' ' << be.b << ' ' << static_cast<int>(be.marker) << "\n";
  }
}

TriMesh read_mesh_text(std::istream& is) {
  std::string tag;
  int version = 0;
  is >> tag >> version;
  if (tag != "vishape-mesh" || version != 1) throw MeshError("read_mesh_text: bad header");

  TriMesh mesh;
  int n = 0;
  is >> tag >> n;
  if (tag != "nodes" || n < 3) throw MeshError("read_mesh_text: bad node section");
  mesh.nodes.resize(static_cast<std::size_t>(n));
  mesh.node_flags.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = 0.0, y = 0.0;
    int f = 0;
    is >> x >> y >> f;
    mesh.nodes[static_cast<std::size_t>(i)] = {x, y};
    if (f < 0 || f > 2) throw MeshError("read_mesh_text: bad node flag");
    mesh.node_flags[static_cast<std::size_t>(i)] = static_cast<NodeFlag>(f);
  }

  int m = 0;
  is >> tag >> m;
  if (tag != "triangles" || m < 1) throw MeshError("read_mesh_text: bad triangle section");
  mesh.triangles.resize(static_cast<std::size_t>(m));
  mesh.subdomain.resize(static_cast<std::size_t>(m));
  for (int t = 0; t < m; ++t) {
    int a = 0, b = 0, c = 0, s = 0;
    is >> a >> b >> c >> s;
    mesh.triangles[static_cast<std::size_t>(t)] = {a, b, c};
    if (s < 0 || s > 1) throw MeshError("read_mesh_text: bad subdomain label");
    mesh.subdomain[static_cast<std::size_t>(t)] = static_cast<Subdomain>(s);
  }

  int nb = 0;
  is >> tag >> nb;
  if (tag != "boundary_edges" || nb < 0) throw MeshError("read_mesh_text: bad boundary section");
  mesh.boundary_edges.resize(static_cast<std::size_t>(nb));
  for (int e = 0; e < nb; ++e) {
    int a = 0, b = 0, mk = 0;
    is >> a >> b >> mk;
    if (mk != 1 && mk != 2) throw MeshError("read_mesh_text: bad edge marker");
    mesh.boundary_edges[static_cast<std::size_t>(e)] = {a, b, static_cast<EdgeMarker>(mk)};
  }
  if (!is) throw MeshError("read_mesh_text: truncated file");

  mesh.validate();
  return mesh;
}

void write_mesh_file(const TriMesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw MeshError("write_mesh_file: cannot open " + path);
  write_mesh_text(mesh, os);
}

TriMesh read_mesh_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MeshError("read_mesh_file: cannot open " + path);
  return read_mesh_text(is);
}

}  // namespace vishape
