#pragma once

#include <functional>
#include <string>

#include "ipest/design.hpp"

namespace ipest {

struct SolverConfig {
  int max_iterations = 100;
  int max_halvings = 30;
  double gradient_tol = 1e-10;
  /// When the line search fails, the fit still counts as converged if the
  /// gradient norm is below this fraction of its value at the start.
  double stationarity_rel = 1e-6;
};

enum class SolverStatus { converged, boundary, stalled, max_iterations };
std::string to_string(SolverStatus s);

struct SolverResult {
  Vector x;
  Vector residual;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  SolverStatus status = SolverStatus::stalled;
};

/// Damped Gauss-Newton with a caller-supplied step (exact gradient, surrogate
/// curvature). The step is
/// halved until the objective decreases; iterates are mapped through
/// `project` after every trial step.
struct GaussNewtonProblem {
  std::function<Vector(const Vector& x)> residual;
  std::function<double(const Vector& x, const Vector& r)> objective;
  std::function<Vector(const Vector& x, const Vector& r)> step;
  std::function<double(const Vector& x, const Vector& r)> gradient_norm;
  /// Identity if empty.
  std::function<Vector(const Vector& x)> project;
  /// True when `project(x) != x` means x left the feasible set.
  std::function<bool(const Vector& x)> on_boundary;
  /// One full step solves the problem exactly.
  bool linear = false;
};

SolverResult gauss_newton(const GaussNewtonProblem& problem, const Vector& x0,
                          const SolverConfig& config);

/// Radial projection of x onto the ball of radius rho around the origin.
Vector project_to_ball(const Vector& z, double rho);

}  // namespace ipest
