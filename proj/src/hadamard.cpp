#include "vishape/hadamard.hpp"

#include <cmath>
#include <stdexcept>

namespace vishape {

double dh_max(double x, double v) {
  if (std::isnan(x) || std::isnan(v)) {
    throw std::invalid_argument("dh_max: NaN input");
  }
  if (x > 0.0) return v;
  if (x < 0.0) return 0.0;
  return std::max(0.0, v);
}

double dh_chain(const SemiDiffFn& outer, const SemiDiffFn& inner, double x, double v) {
  return outer.semideriv(inner.value(x), inner.semideriv(x, v));
}

double dh_linear_comb(const SemiDiffFn& f1, const SemiDiffFn& f2, double alpha,
                      double beta, double x, double v) {
  return alpha * f1.semideriv(x, v) + beta * f2.semideriv(x, v);
}

FdResult fd_one_sided(const std::function<double(double)>& f, double x, double v,
                      std::span<const double> steps, double tol) {
  if (steps.empty()) throw std::invalid_argument("fd_one_sided: empty step list");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] > 0.0)) throw std::invalid_argument("fd_one_sided: steps must be positive");
    if (i > 0 && !(steps[i] < steps[i - 1])) {
      throw std::invalid_argument("fd_one_sided: steps must be strictly decreasing");
    }
  }

  const double f0 = f(x);
  std::vector<double> q(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    q[i] = (f(x + steps[i] * v) - f0) / steps[i];
  }

  FdResult out;
  if (q.size() == 1) {
    out.value = q[0];
    out.converged = false;
    return out;
  }

  // First-order one-sided quotients carry an O(t) error; eliminating the
  // linear term from consecutive steps gives the extrapolated sequence.
  std::vector<double> r(q.size() - 1);
  for (std::size_t i = 0; i + 1 < q.size(); ++i) {
    const double t0 = steps[i], t1 = steps[i + 1];
    r[i] = (q[i + 1] * t0 - q[i] * t1) / (t0 - t1);
  }
  out.value = r.back();

  const double scale = 1.0 + std::abs(out.value);
  if (r.size() >= 2) {
    out.converged = std::abs(r[r.size() - 1] - r[r.size() - 2]) <= tol * scale;
  } else {
    out.converged = std::abs(r[0] - q.back()) <= tol * scale;
  }
  return out;
}

std::vector<double> geometric_steps(double t0, int n) {
  std::vector<double> s(static_cast<std::size_t>(n));
  double t = t0;
  for (int i = 0; i < n; ++i, t *= 0.1) s[static_cast<std::size_t>(i)] = t;
  return s;
}

double check_gradient_fd(const AnalyticField2D& g, std::span<const Vec2> samples, double h) {
  double worst = 0.0;
  for (const Vec2& p : samples) {
    for (int c = 0; c < 2; ++c) {
      Vec2 dp = Vec2::Zero();
      dp[c] = h;
      const double fd = (g.value(p + dp) - g.value(p - dp)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g.gradient(p)[c]));
    }
  }
  return worst;
}

double verify_material_gradient_rule(const AnalyticField2D& g,
                                     const AnalyticField2D& v1,
                                     const AnalyticField2D& v2,
                                     std::span<const Vec2> samples,
                                     std::span<const double> t_steps) {
  if (t_steps.empty()) throw std::invalid_argument("verify_material_gradient_rule: no steps");

  double worst = 0.0;
  for (const Vec2& p : samples) {
    // Jacobian DV with row l = component, column i = d/dx_i.
    Mat2 dv;
    dv.row(0) = v1.gradient(p).transpose();
    dv.row(1) = v2.gradient(p).transpose();

    const Vec2 grad0 = g.gradient(p);
    const Vec2 rhs = -dv.transpose() * grad0;

    // (grad g_t) o F_t = (I + t DV)^{-T} grad g for the transported family,
    // so the left side is its one-sided t-derivative at 0.
    for (int c = 0; c < 2; ++c) {
      auto along = [&](double t) {
        const Mat2 ft = Mat2::Identity() + t * dv;
        if (ft.determinant() <= 0.0) {
          throw std::runtime_error("verify_material_gradient_rule: F_t not invertible at sample");
        }
        const Vec2 transported = ft.transpose().inverse() * grad0;
        return transported[c];
      };
      FdResult lhs = fd_one_sided(along, 0.0, 1.0, t_steps, 1e-5);
      worst = std::max(worst, std::abs(lhs.value - rhs[c]));
    }
  }
  return worst;
}

SemiDiffFn sdf_max0() {
  return {[](double x) { return std::max(0.0, x); },
          [](double x, double v) { return dh_max(x, v); }};
}

SemiDiffFn sdf_identity() {
  return {[](double x) { return x; }, [](double, double v) { return v; }};
}

SemiDiffFn sdf_affine(double a0, double a1) {
  return {[=](double x) { return a0 + a1 * x; },
          [=](double, double v) { return a1 * v; }};
}

SemiDiffFn sdf_square() {
  return {[](double x) { return x * x; },
          [](double x, double v) { return 2.0 * x * v; }};
}

SemiDiffFn sdf_abs() {
  return {[](double x) { return std::abs(x); },
          [](double x, double v) {
            if (x > 0.0) return v;
            if (x < 0.0) return -v;
            return std::abs(v);
          }};
}

SemiDiffFn sdf_scale(const SemiDiffFn& f, double s) {
  return {[f, s](double x) { return s * f.value(x); },
          [f, s](double x, double v) { return s * f.semideriv(x, v); }};
}

}  // namespace vishape
