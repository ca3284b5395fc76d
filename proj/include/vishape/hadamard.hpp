#pragma once

// One-sided (Hadamard) directional derivative toolkit for scalar functions
// and planar fields. The semiderivative d_H f(x)[v] is the limit of
// (f(x + t v) - f(x)) / t as t -> 0+; it is positively homogeneous in v but
// need not be linear (max(0, .) at the kink is the canonical case).

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vishape {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Scalar function together with its one-sided directional derivative.
struct SemiDiffFn {
  std::function<double(double)> value;                 // x -> f(x)
  std::function<double(double, double)> semideriv;     // (x, v) -> d_H f(x)[v]
};

/// d_H max{0,.}(x)[v]: v for x > 0, max{0,v} for x = 0, 0 for x < 0.
/// Rejects NaN inputs.
double dh_max(double x, double v);

/// Composition rule: d_H (f o g)(x)[v] = d_H f(g(x))[ d_H g(x)[v] ].
double dh_chain(const SemiDiffFn& outer, const SemiDiffFn& inner, double x, double v);

/// alpha * d_H f1(x)[v] + beta * d_H f2(x)[v].
double dh_linear_comb(const SemiDiffFn& f1, const SemiDiffFn& f2, double alpha,
                      double beta, double x, double v);

struct FdResult {
  double value = 0.0;   // extrapolated one-sided quotient
  bool converged = false;
};

/// One-sided difference quotient of t -> f(x + t v), Richardson-extrapolated
/// over the given positive, strictly decreasing step sequence. `converged`
/// is set when the last extrapolated values agree within `tol`. This is the
/// reference oracle every semideriv implementation is tested against.
FdResult fd_one_sided(const std::function<double(double)>& f, double x, double v,
                      std::span<const double> steps, double tol = 1e-7);

/// Default geometric step sequence t0 * 10^-k, k = 0..n-1.
std::vector<double> geometric_steps(double t0, int n);

/// Scalar field on R^2 with analytic first (and optionally second) derivatives.
struct AnalyticField2D {
  std::function<double(Vec2)> value;
  std::function<Vec2(Vec2)> gradient;
  std::function<Mat2(Vec2)> hessian;   // may be empty

  bool has_hessian() const { return static_cast<bool>(hessian); }
};

/// Checks gradient() against central differences of value() at the samples.
/// Returns the maximum componentwise discrepancy.
double check_gradient_fd(const AnalyticField2D& g, std::span<const Vec2> samples,
                         double h = 1e-6);

/// Commutator check for the material derivative of a gradient under the
/// deformation F_t = id + tV, for the transported family g_t = g o F_t^{-1}
/// (whose material derivative vanishes by construction). For each sample the
/// one-sided FD in t of (grad g_t) o F_t is compared against the analytic
/// right-hand side -(DV)^T grad g. Returns the max absolute residual.
/// Throws if F_t is not invertible near a sample for the given steps.
double verify_material_gradient_rule(const AnalyticField2D& g,
                                     const AnalyticField2D& v1,
                                     const AnalyticField2D& v2,
                                     std::span<const Vec2> samples,
                                     std::span<const double> t_steps);

// Small catalog used by the property tests and the verify-calculus command.
SemiDiffFn sdf_max0();
SemiDiffFn sdf_identity();
SemiDiffFn sdf_affine(double a0, double a1);
SemiDiffFn sdf_square();
SemiDiffFn sdf_abs();
SemiDiffFn sdf_scale(const SemiDiffFn& f, double s);

}  // namespace vishape
