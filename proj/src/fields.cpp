#include "vishape/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vishape {

namespace {

class ConstantField final : public FieldSource {
 public:
  explicit ConstantField(double v) : v_(v) {}
  double value(Vec2) const override { return v_; }
  Vec2 gradient(Vec2) const override { return Vec2::Zero(); }

 private:
  double v_;
};

class AffineField final : public FieldSource {
 public:
  AffineField(double a0, double ax, double ay) : a0_(a0), g_(ax, ay) {}
  double value(Vec2 p) const override { return a0_ + g_.dot(p); }
  Vec2 gradient(Vec2) const override { return g_; }

 private:
  double a0_;
  Vec2 g_;
};

class RadialBumpField final : public FieldSource {
 public:
  RadialBumpField(double amp, Vec2 center, double sigma)
      : amp_(amp), center_(center), inv2s2_(1.0 / (2.0 * sigma * sigma)) {
    if (!(sigma > 0.0)) throw std::invalid_argument("radial bump: sigma must be positive");
  }
  double value(Vec2 p) const override {
    return amp_ * std::exp(-(p - center_).squaredNorm() * inv2s2_);
  }
  Vec2 gradient(Vec2 p) const override {
    return value(p) * (-2.0 * inv2s2_) * (p - center_);
  }

 private:
  double amp_;
  Vec2 center_;
  double inv2s2_;
};

class ProductField final : public FieldSource {
 public:
  ProductField(FieldPtr f1, FieldPtr f2) : f1_(std::move(f1)), f2_(std::move(f2)) {}
  double value(Vec2 p) const override { return f1_->value(p) * f2_->value(p); }
  Vec2 gradient(Vec2 p) const override {
    return f1_->gradient(p) * f2_->value(p) + f1_->value(p) * f2_->gradient(p);
  }

 private:
  FieldPtr f1_, f2_;
};

}  // namespace

FieldPtr make_constant_field(double value) { return std::make_shared<ConstantField>(value); }

FieldPtr make_affine_field(double a0, double ax, double ay) {
  return std::make_shared<AffineField>(a0, ax, ay);
}

FieldPtr make_radial_bump_field(double amplitude, Vec2 center, double sigma) {
  return std::make_shared<RadialBumpField>(amplitude, center, sigma);
}

FieldPtr make_product_field(FieldPtr f1, FieldPtr f2) {
  return std::make_shared<ProductField>(std::move(f1), std::move(f2));
}

MeshP1Field::MeshP1Field(TriMesh mesh, ScalarField nodal_values)
    : mesh_(std::move(mesh)), values_(std::move(nodal_values)) {
  if (values_.size() != mesh_.node_count()) {
    throw std::invalid_argument("MeshP1Field: value count mismatch");
  }
  geom_.reserve(static_cast<std::size_t>(mesh_.triangle_count()));
  for (int t = 0; t < mesh_.triangle_count(); ++t) geom_.push_back(element_geometry(mesh_, t));

  lo_ = hi_ = mesh_.nodes[0];
  for (const Vec2& p : mesh_.nodes) {
    lo_ = lo_.cwiseMin(p);
    hi_ = hi_.cwiseMax(p);
  }
  const int target = std::max(1, static_cast<int>(std::sqrt(mesh_.triangle_count())));
  nx_ = ny_ = target;
  bins_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  const Vec2 span = (hi_ - lo_).cwiseMax(Vec2(1e-12, 1e-12));
  auto bin_of = [&](double x, double y) {
    int bx = std::clamp(static_cast<int>((x - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
    int by = std::clamp(static_cast<int>((y - lo_.y()) / span.y() * ny_), 0, ny_ - 1);
    return by * nx_ + bx;
  };
  for (int t = 0; t < mesh_.triangle_count(); ++t) {
    const auto& tv = mesh_.triangles[static_cast<std::size_t>(t)];
    Vec2 tlo = mesh_.nodes[static_cast<std::size_t>(tv[0])];
    Vec2 thi = tlo;
    for (int k = 1; k < 3; ++k) {
      tlo = tlo.cwiseMin(mesh_.nodes[static_cast<std::size_t>(tv[k])]);
      thi = thi.cwiseMax(mesh_.nodes[static_cast<std::size_t>(tv[k])]);
    }
    const int b0 = bin_of(tlo.x(), tlo.y());
    const int b1 = bin_of(thi.x(), thi.y());
    const int bx0 = b0 % nx_, by0 = b0 / nx_;
    const int bx1 = b1 % nx_, by1 = b1 / nx_;
    for (int by = by0; by <= by1; ++by) {
      for (int bx = bx0; bx <= bx1; ++bx) {
        bins_[static_cast<std::size_t>(by * nx_ + bx)].push_back(t);
      }
    }
  }
}

int MeshP1Field::locate(Vec2 p) const {
  const Vec2 span = (hi_ - lo_).cwiseMax(Vec2(1e-12, 1e-12));
  const int bx = std::clamp(static_cast<int>((p.x() - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
  const int by = std::clamp(static_cast<int>((p.y() - lo_.y()) / span.y() * ny_), 0, ny_ - 1);

  auto min_bary = [&](int t) {
    const ElementGeom& g = geom_[static_cast<std::size_t>(t)];
    double worst = 1.0;
    for (int i = 0; i < 3; ++i) {
      const Vec2& pi = mesh_.nodes[static_cast<std::size_t>(g.v[i])];
      // hat value of vertex i at p
      const double lam = 1.0 + g.grad[i].dot(p - pi);
      worst = std::min(worst, lam);
    }
    return worst;
  };

  int best = -1;
  double best_bary = -1e300;
  for (int t : bins_[static_cast<std::size_t>(by * nx_ + bx)]) {
    const double mb = min_bary(t);
    if (mb > best_bary) {
      best_bary = mb;
      best = t;
    }
    if (mb >= -1e-12) return t;
  }
  // Slow path: the point sits outside every triangle of its bin (possible
  // just past the hull after roundoff); take the closest triangle overall.
  for (int t = 0; t < mesh_.triangle_count(); ++t) {
    const double mb = min_bary(t);
    if (mb > best_bary) {
      best_bary = mb;
      best = t;
    }
    if (mb >= -1e-12) return t;
  }
  return best;
}

double MeshP1Field::value(Vec2 p) const {
  const int t = locate(p);
  const ElementGeom& g = geom_[static_cast<std::size_t>(t)];
  double out = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vec2& pi = mesh_.nodes[static_cast<std::size_t>(g.v[i])];
    out += values_[g.v[i]] * (1.0 + g.grad[i].dot(p - pi));
  }
  return out;
}

Vec2 MeshP1Field::gradient(Vec2 p) const {
  const int t = locate(p);
  const ElementGeom& g = geom_[static_cast<std::size_t>(t)];
  Vec2 out = Vec2::Zero();
  for (int i = 0; i < 3; ++i) out += values_[g.v[i]] * g.grad[i];
  return out;
}

FieldPtr make_mesh_field(TriMesh mesh, ScalarField nodal_values) {
  return std::make_shared<MeshP1Field>(std::move(mesh), std::move(nodal_values));
}

ScalarField sample_values(const FieldSource& f, const TriMesh& mesh) {
  ScalarField out(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) out[i] = f.value(mesh.nodes[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<Vec2> sample_gradients(const FieldSource& f, const TriMesh& mesh) {
  std::vector<Vec2> out(static_cast<std::size_t>(mesh.node_count()));
  for (int i = 0; i < mesh.node_count(); ++i) out[static_cast<std::size_t>(i)] = f.gradient(mesh.nodes[static_cast<std::size_t>(i)]);
  return out;
}

ScalarField SourceTerm::load(const TriMesh& mesh) const {
  if (kind == Kind::analytic) {
    return assemble_load(mesh, sample_values(*field, mesh));
  }
  return assemble_load_piecewise(mesh, f_interior, f_exterior);
}

double SourceTerm::element_fv_integral(const TriMesh& mesh, const ElementGeom& g, int t,
                                       const ScalarField& w, const ScalarField& f_nodal_cache) const {
  if (kind == Kind::analytic) {
    // exact P1 x P1 product integral
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        s += (i == j ? 2.0 : 1.0) * f_nodal_cache[g.v[i]] * w[g.v[j]];
      }
    }
    return g.area / 12.0 * s;
  }
  const double f =
      mesh.subdomain[static_cast<std::size_t>(t)] == Subdomain::interior ? f_interior : f_exterior;
  return f * g.area / 3.0 * (w[g.v[0]] + w[g.v[1]] + w[g.v[2]]);
}

SourceTerm analytic_source(FieldPtr f) {
  SourceTerm s;
  s.kind = SourceTerm::Kind::analytic;
  s.field = std::move(f);
  return s;
}

SourceTerm piecewise_source(double f_interior, double f_exterior) {
  SourceTerm s;
  s.kind = SourceTerm::Kind::piecewise;
  s.f_interior = f_interior;
  s.f_exterior = f_exterior;
  return s;
}

}  // namespace vishape
