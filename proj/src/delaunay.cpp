#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "vishape/mesh.hpp"

namespace vishape {

namespace {

struct Tri {
  std::array<int, 3> v;
  bool alive = true;
};

// > 0 if p lies inside the circumcircle of (a, b, c), assuming CCW order.
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double ax = a.x() - p.x(), ay = a.y() - p.y();
  const double bx = b.x() - p.x(), by = b.y() - p.y();
  const double cx = c.x() - p.x(), cy = c.y() - p.y();
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
}

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

}  // namespace

std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Vec2>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw MeshError("delaunay_triangulate: need at least 3 points");

  // Bounding super-triangle, far enough out that it never interferes.
  Vec2 lo = points[0], hi = points[0];
  for (const Vec2& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-6});
  const Vec2 mid = 0.5 * (lo + hi);
  std::vector<Vec2> pts = points;
  pts.push_back(mid + Vec2(-20.0 * span, -10.0 * span));
  pts.push_back(mid + Vec2(20.0 * span, -10.0 * span));
  pts.push_back(mid + Vec2(0.0, 25.0 * span));

  std::vector<Tri> tris;
  tris.push_back({{n, n + 1, n + 2}, true});

  std::vector<int> bad;
  // Cavity boundary edges collected during each insertion.
  std::vector<std::array<int, 2>> poly;

  for (int ip = 0; ip < n; ++ip) {
    const Vec2& p = pts[static_cast<std::size_t>(ip)];
    bad.clear();
    for (int it = 0; it < static_cast<int>(tris.size()); ++it) {
      if (!tris[static_cast<std::size_t>(it)].alive) continue;
      const auto& t = tris[static_cast<std::size_t>(it)].v;
      if (incircle(pts[static_cast<std::size_t>(t[0])], pts[static_cast<std::size_t>(t[1])],
                   pts[static_cast<std::size_t>(t[2])], p) > 0.0) {
        bad.push_back(it);
      }
    }

    poly.clear();
    for (int it : bad) {
      const auto& t = tris[static_cast<std::size_t>(it)].v;
      for (int e = 0; e < 3; ++e) {
        std::array<int, 2> edge{t[e], t[(e + 1) % 3]};
        // An edge shared by two bad triangles is interior to the cavity.
        bool shared = false;
        for (auto it2 = poly.begin(); it2 != poly.end(); ++it2) {
          if (((*it2)[0] == edge[1] && (*it2)[1] == edge[0]) ||
              ((*it2)[0] == edge[0] && (*it2)[1] == edge[1])) {
            poly.erase(it2);
            shared = true;
            break;
          }
        }
        if (!shared) poly.push_back(edge);
      }
      tris[static_cast<std::size_t>(it)].alive = false;
    }

    for (const auto& edge : poly) {
      std::array<int, 3> tv{edge[0], edge[1], ip};
      if (orient(pts[static_cast<std::size_t>(tv[0])], pts[static_cast<std::size_t>(tv[1])],
                 pts[static_cast<std::size_t>(tv[2])]) < 0.0) {
        std::swap(tv[0], tv[1]);
      }
      tris.push_back({tv, true});
    }
  }

  std::vector<std::array<int, 3>> out;
  for (const Tri& t : tris) {
    if (!t.alive) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    out.push_back(t.v);
  }
  return out;
}

}  // namespace vishape
