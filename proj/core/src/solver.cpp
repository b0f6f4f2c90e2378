#include "ipest/solver.hpp"

#include <cmath>

namespace ipest {

std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::boundary: return "boundary";
    case SolverStatus::stalled: return "stalled";
    case SolverStatus::max_iterations: return "max-iterations";
  }
  return "unknown";
}

Vector project_to_ball(const Vector& z, double rho) {
  if (!std::isfinite(rho)) return z;
  const double nrm = z.norm();
  if (nrm <= rho) return z;
  return z * (rho / nrm);
}

SolverResult gauss_newton(const GaussNewtonProblem& pb, const Vector& x0,
                          const SolverConfig& cfg) {
  auto project = [&](const Vector& v) { return pb.project ? pb.project(v) : v; };
  SolverResult out;
  out.x = project(x0);
  out.residual = pb.residual(out.x);
  out.objective = pb.objective(out.x, out.residual);
  out.status = SolverStatus::max_iterations;
  double g_start = -1.0;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const double gn = pb.gradient_norm(out.x, out.residual);
    if (g_start < 0.0) g_start = gn;
    if (gn <= cfg.gradient_tol) {
      out.status = SolverStatus::converged;
      break;
    }
    const Vector delta = pb.step(out.x, out.residual);
    if (!delta.allFinite()) {
      out.status = SolverStatus::stalled;
      break;
    }
    double t = 1.0;
    bool accepted = false;
    Vector xn, rn;
    double fn = 0.0;
    for (int h = 0; h <= cfg.max_halvings; ++h, t *= 0.5) {
      xn = project(out.x + t * delta);
      rn = pb.residual(xn);
      fn = pb.objective(xn, rn);
      if (std::isfinite(fn) && fn < out.objective) {
        accepted = true;
        break;
      }
      if (pb.linear) break;
    }
    if (!accepted) {
      // No decrease along the step: the iterate sits on the trust-ball
      // boundary, or the step is below the resolution of the objective.
      const double scale = 1.0 + out.x.norm();
      if (pb.on_boundary && pb.on_boundary(out.x)) out.status = SolverStatus::boundary;
      else if (delta.norm() <= 1e-9 * scale || out.objective == 0.0)
        out.status = SolverStatus::converged;
      else if (gn <= cfg.stationarity_rel * g_start)
        out.status = SolverStatus::converged;
      else
        out.status = SolverStatus::stalled;
      break;
    }
    out.x = std::move(xn);
    out.residual = std::move(rn);
    out.objective = fn;
    out.iterations = it + 1;
    if (pb.linear) {
      out.status = pb.on_boundary && pb.on_boundary(out.x) ? SolverStatus::boundary
                                                           : SolverStatus::converged;
      break;
    }
  }
  out.converged = out.status == SolverStatus::converged || out.status == SolverStatus::boundary;
  return out;
}

}  // namespace ipest
