#include "ipest/tikhonov.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ipest/errors.hpp"

namespace ipest {

void AlphaGrid::validate() const {
  if (!(alpha0 > 0.0)) throw ConfigError("alpha grid needs alpha0 > 0");
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("alpha grid needs 0 < q < 1");
  if (K == 0) throw ConfigError("alpha grid needs K >= 1");
  if (!(c_L >= 0.0)) throw ConfigError("alpha grid weights need c_L >= 0");
}

double AlphaGrid::value(std::size_t k) const { return alpha0 * std::pow(q, static_cast<double>(k)); }

double AlphaGrid::weight(std::size_t k) const {
  return static_cast<double>(k) * c_L / static_cast<double>(K) + 1.0;
}

std::vector<double> AlphaGrid::values() const {
  std::vector<double> v(K);
  for (std::size_t k = 0; k < K; ++k) v[k] = value(k);
  return v;
}

TikhonovContext make_tikhonov_context(const ForwardOperator& op, const SubspaceLadder& ladder,
                                      std::size_t m0) {
  if (op.n() != ladder.n()) throw DimensionError("operator and ladder differ in n");
  TikhonovContext ctx{op, ladder};
  ctx.m0 = m0;
  ctx.system = build_model_system(op.linearization(), ladder, m0);
  Svd svd = thin_svd(ctx.system.M);
  ctx.U = std::move(svd.U);
  ctx.s = std::move(svd.s);
  ctx.V = std::move(svd.V);
  return ctx;
}

namespace {
RegularizedOperator regularize(const Vector& s, double alpha, std::size_t n) {
  if (!(alpha > 0.0)) throw DomainError("Tikhonov parameter alpha must be positive");
  RegularizedOperator reg;
  reg.alpha = alpha;
  reg.filter = s.array() / (s.array().square() + alpha);
  const double nd = static_cast<double>(n);
  const Vector f2 = reg.filter.cwiseAbs2() / nd;
  reg.trace_rr = f2.sum();
  reg.rho2_r = f2.size() ? f2.maxCoeff() : 0.0;
  return reg;
}
}  // namespace

RegularizedOperator build_regularized(const TikhonovContext& ctx, double alpha, bool materialize) {
  RegularizedOperator reg = regularize(ctx.s, alpha, ctx.op.n());
  if (materialize) {
    const auto Qm = ctx.ladder.Q().leftCols(static_cast<Eigen::Index>(ctx.system.dim));
    reg.matrix = ctx.V * reg.filter.asDiagonal() * ctx.U.transpose() * Qm.transpose() /
                 static_cast<double>(ctx.op.n());
  }
  return reg;
}

RegularizedOperator build_regularized(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                                      const ModelProjector& projector, double alpha,
                                      bool materialize) {
  if (T.n() != ladder.n()) throw DimensionError("operator and ladder differ in n");
  Svd svd = thin_svd(projector.system.M);
  RegularizedOperator reg = regularize(svd.s, alpha, T.n());
  if (materialize) {
    const auto Qm = ladder.Q().leftCols(static_cast<Eigen::Index>(projector.dim));
    reg.matrix = svd.V * reg.filter.asDiagonal() * svd.U.transpose() * Qm.transpose() /
                 static_cast<double>(T.n());
  }
  return reg;
}

double pen_tikhonov(const RegularizedOperator& reg, double r, double L_k, double sigma) {
  return r * sigma * sigma * (1.0 + L_k) * (reg.trace_rr + reg.rho2_r);
}

namespace {
// Orthonormal coordinates of y - F(x_star + z) in Y_{m0}.
Vector residual_coords(const TikhonovContext& ctx, const ObservationSet& obs, const Vector& z) {
  const Vector r = obs.values() - ctx.op.evaluate(ctx.op.x_star() + z);
  return ctx.ladder.orthonormal_coefficients(ctx.m0, r);
}
}  // namespace

double tikhonov_contrast(const TikhonovContext& ctx, const ObservationSet& obs,
                         const RegularizedOperator& reg, const Vector& z) {
  const Vector c = residual_coords(ctx, obs, z);
  return (reg.filter.asDiagonal() * (ctx.U.transpose() * c)).squaredNorm();
}

FitResult fit_tikhonov(const TikhonovContext& ctx, const ObservationSet& obs,
                       const RegularizedOperator& reg, const SolverConfig& config) {
  if (obs.size() != ctx.op.n()) throw DimensionError("observations do not match the operator grid");
  const ForwardOperator& op = ctx.op;
  const double alpha = reg.alpha;
  FitResult out;
  if (op.is_linear()) {
    const Vector c = residual_coords(ctx, obs, Vector::Zero(static_cast<Eigen::Index>(op.dim())));
    out.coefficients = ctx.V * (reg.filter.asDiagonal() * (ctx.U.transpose() * c));
    out.iterations = 1;
    if (out.coefficients.norm() > op.rho()) {
      out.coefficients = project_to_ball(out.coefficients, op.rho());
      out.status = SolverStatus::boundary;
    }
  } else {
    const Matrix& M = ctx.system.M;
    Matrix H = M.transpose() * M;
    H.diagonal().array() += alpha;
    const Eigen::LLT<Matrix> llt(H);
    const double rho = op.rho();
    GaussNewtonProblem pb;
    pb.residual = [&](const Vector& z) -> Vector { return residual_coords(ctx, obs, z); };
    pb.objective = [alpha](const Vector& z, const Vector& r) {
      return r.squaredNorm() + alpha * z.squaredNorm();
    };
    const auto Q0 = ctx.ladder.Q().leftCols(static_cast<Eigen::Index>(ctx.system.dim));
    const double nd = static_cast<double>(obs.size());
    // Exact half-gradient with the surrogate curvature M^t M + alpha I.
    auto descent = [&](const Vector& z, const Vector& r) -> Vector {
      return op.jacobian_transpose_apply(op.x_star() + z, Q0 * r) / nd - alpha * z;
    };
    pb.step = [&](const Vector& z, const Vector& r) -> Vector { return llt.solve(descent(z, r)); };
    pb.gradient_norm = [&](const Vector& z, const Vector& r) { return descent(z, r).norm(); };
    pb.project = [rho](const Vector& z) { return project_to_ball(z, rho); };
    pb.on_boundary = [rho](const Vector& z) {
      return std::isfinite(rho) && z.norm() >= rho * (1.0 - 1e-12);
    };
    SolverResult res = gauss_newton(pb, Vector::Zero(static_cast<Eigen::Index>(op.dim())), config);
    out.coefficients = std::move(res.x);
    out.iterations = res.iterations;
    out.converged = res.converged;
    out.status = res.status;
  }
  const Vector c = residual_coords(ctx, obs, out.coefficients);
  out.projected_residual = c.squaredNorm();
  out.full_residual = (obs.values() - op.evaluate(op.x_star() + out.coefficients)).squaredNorm() /
                      static_cast<double>(obs.size());
  return out;
}

bool alpha_admissible(double alpha, std::size_t d_m0, double p) {
  return static_cast<double>(d_m0) >= std::pow(alpha, -1.0 / (2.0 * p)) * (1.0 - 1e-12);
}

EstimatorReport select_tikhonov(const TikhonovContext& ctx, const ObservationSet& obs,
                                const AlphaGrid& grid, double r, double sigma,
                                const TikhonovOptions& options) {
  grid.validate();
  if (!(r > 2.0)) throw DomainError("Tikhonov penalty needs r > 2");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be nonnegative");
  EstimatorReport rep;
  rep.estimator = "tikhonov";
  rep.m0 = ctx.m0;
  const std::size_t d0 = ctx.system.dim;
  const double p = ctx.op.p();

  const bool linear = ctx.op.is_linear();
  Vector c0, Uc0;
  if (linear) {
    if (obs.size() != ctx.op.n()) throw DimensionError("observations do not match the operator grid");
    c0 = residual_coords(ctx, obs, Vector::Zero(static_cast<Eigen::Index>(ctx.op.dim())));
    Uc0 = ctx.U.transpose() * c0;
  }

  std::vector<Vector> coeffs;
  std::size_t skipped = 0;
  for (std::size_t k = 0; k < grid.K; ++k) {
    const double alpha = grid.value(k);
    if (!alpha_admissible(alpha, d0, p)) {
      ++skipped;
      continue;
    }
    const RegularizedOperator reg = build_regularized(ctx, alpha);
    CandidateRecord cand;
    FitResult fit;
    if (linear) {
      // Closed form on the cached coordinates of y - F(x_star).
      fit.coefficients = ctx.V * (reg.filter.asDiagonal() * Uc0);
      fit.iterations = 1;
      if (fit.coefficients.norm() > ctx.op.rho()) {
        fit.coefficients = project_to_ball(fit.coefficients, ctx.op.rho());
        fit.status = SolverStatus::boundary;
      }
      const Vector rc = c0 - ctx.system.M * fit.coefficients;
      cand.risk = (reg.filter.asDiagonal() * (ctx.U.transpose() * rc)).squaredNorm();
    } else {
      fit = fit_tikhonov(ctx, obs, reg, options.solver);
      cand.risk = tikhonov_contrast(ctx, obs, reg, fit.coefficients);
    }
    cand.index = k;
    cand.dim = d0;
    cand.alpha = alpha;
    cand.penalty = pen_tikhonov(reg, r, grid.weight(k), sigma);
    cand.criterion = cand.risk + cand.penalty;
    cand.iterations = fit.iterations;
    cand.converged = fit.converged;
    if (!fit.converged)
      rep.warnings.push_back("solver did not converge at alpha index " + std::to_string(k));
    rep.candidates.push_back(std::move(cand));
    coeffs.push_back(std::move(fit.coefficients));
  }
  if (rep.candidates.empty())
    throw ConfigError("no alpha on the grid satisfies d_m0 >= alpha^(-1/(2p)) (d_m0 = " +
                      std::to_string(d0) + ")");
  if (skipped > 0)
    rep.warnings.push_back(std::to_string(skipped) +
                           " alpha grid point(s) skipped: d_m0 < alpha^(-1/(2p))");

  double scale = 0.0;
  for (const auto& c : rep.candidates) scale = std::max(scale, std::abs(c.criterion));
  const double tol = 1e-12 * scale;
  // Candidates are in decreasing alpha, so a strict improvement is needed to move on.
  std::size_t best = 0;
  for (std::size_t i = 1; i < rep.candidates.size(); ++i)
    if (rep.candidates[i].criterion < rep.candidates[best].criterion - tol) best = i;

  const CandidateRecord& sel = rep.candidates[best];
  rep.selected = sel.index;
  rep.selected_alpha = sel.alpha;
  rep.selected_dim = d0;
  rep.coefficients = coeffs[best];
  rep.estimate = ctx.op.x_star() + rep.coefficients;
  rep.empirical_risk = sel.risk;
  rep.penalty = sel.penalty;
  rep.criterion = sel.criterion;
  rep.solver_iterations = sel.iterations;
  rep.solver_converged = sel.converged;
  if (options.keep_candidate_coefficients)
    for (std::size_t i = 0; i < rep.candidates.size(); ++i) rep.candidates[i].coefficients = coeffs[i];
  return rep;
}

}  // namespace ipest
