#pragma once

// Experiment description: geometry, coefficients, data fields (from a small
// catalog of analytic expressions with exact gradients, or self-generated
// target data), constants and solver knobs. Parsed from JSON; unknown keys
// are rejected, every invariant failure carries the offending field path.

#include <string>
#include <vector>

#include "vishape/optimizer.hpp"
#include "vishape/problem.hpp"

namespace vishape {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExprSpec {
  std::string kind;   // constant | affine | radial_bump | product
  double value = 0.0;                          // constant
  double a0 = 0.0, ax = 0.0, ay = 0.0;         // affine
  double amplitude = 0.0, sigma = 1.0;         // radial_bump
  Vec2 center = Vec2(0.5, 0.5);                // radial_bump
  std::vector<ExprSpec> factors;               // product

  bool operator==(const ExprSpec& o) const;
};

struct GeometrySpec {
  std::string kind = "disk_in_square";   // | mesh_file
  int n_boundary = 64;
  int n_interface = 32;
  double radius = 0.25;
  Vec2 center = Vec2(0.5, 0.5);
  std::string path;

  bool operator==(const GeometrySpec& o) const;
};

struct TargetSpec {
  std::string kind = "expression";   // | self_generated
  ExprSpec expr;
  double interface_radius = 0.3;

  bool operator==(const TargetSpec& o) const;
};

struct SourceSpec {
  std::string kind = "piecewise";   // | expression
  ExprSpec expr;
  double f_interior = 0.0;
  double f_exterior = 0.0;

  bool operator==(const SourceSpec& o) const;
};

struct ProblemSpec {
  GeometrySpec geometry;
  Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
  Vec2 d = Vec2::Zero();
  double b = 0.0;
  ExprSpec obstacle;
  TargetSpec target;
  SourceSpec source;
  double c = 100.0;
  double nu = 0.0;
  double vi_tol = 1e-10;
  int vi_max_iter = 60;
  std::string adjoint_mode = "limit";   // | paper-exact
  OptConfig opt;

  bool operator==(const ProblemSpec& o) const;
  void validate() const;   // throws ConfigError with a named diagnostic
};

ProblemSpec parse_config_text(const std::string& text);
ProblemSpec parse_config_file(const std::string& path);
std::string serialize_config(const ProblemSpec& spec);

FieldPtr build_field(const ExprSpec& expr);

struct BuiltProblem {
  TriMesh mesh;
  ProblemData data;
};

/// Generates (or loads) the mesh and resolves all data fields. A
/// self-generated target solves the state on the target geometry and wraps
/// the result as a P1 mesh field.
BuiltProblem build_problem(const ProblemSpec& spec);

}  // namespace vishape
