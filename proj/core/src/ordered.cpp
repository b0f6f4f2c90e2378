#include "ipest/ordered.hpp"

#include <cmath>
#include <string>

#include "ipest/errors.hpp"

namespace ipest {

void OrderedPenaltySpec::validate() const {
  if (!(r > 2.0)) throw DomainError("ordered penalty needs r > 2");
  if (!(L > 0.0)) throw DomainError("ordered penalty needs L > 0");
  if (!(sigma >= 0.0)) throw DomainError("ordered penalty needs sigma >= 0");
}

double pen_ordered(std::size_t d_m, const OrderedPenaltySpec& spec, std::size_t n) {
  if (n == 0) throw DomainError("pen_ordered needs n >= 1");
  return spec.r * (1.0 + spec.L) * spec.sigma * spec.sigma * static_cast<double>(d_m + 1) /
         static_cast<double>(n);
}

OrderedModel::OrderedModel(ForwardOperator op, SubspaceLadder ladder)
    : op_(std::move(op)), ladder_(std::move(ladder)) {
  if (op_.n() != ladder_.n())
    throw DimensionError("operator grid has n=" + std::to_string(op_.n()) +
                         " but the ladder has n=" + std::to_string(ladder_.n()));
  systems_ = build_model_systems(op_.linearization(), ladder_);
}

const ModelSystem& OrderedModel::system(std::size_t level) const {
  if (level >= systems_.size())
    throw DomainError("ordered model level " + std::to_string(level) + " out of range");
  return systems_[level];
}

namespace {

void check_obs(const ForwardOperator& op, const ObservationSet& obs) {
  if (obs.size() != op.n())
    throw DimensionError("observations have n=" + std::to_string(obs.size()) +
                         " but the operator grid has n=" + std::to_string(op.n()));
}

bool on_ball_boundary(const Vector& z, double rho) {
  return std::isfinite(rho) && z.norm() >= rho * (1.0 - 1e-12);
}

FitResult nonlinear_fit(const ForwardOperator& op, const ObservationSet& obs,
                        const SubspaceLadder& ladder, const ModelSystem& sys,
                        const SolverConfig& config) {
  const double n = static_cast<double>(obs.size());
  const auto d = static_cast<Eigen::Index>(sys.dim);
  const auto Qm = ladder.Q().leftCols(d);
  const Vector c = Qm.transpose() * obs.values() / n;
  const Vector& xs = op.x_star();
  const double rho = op.rho();

  GaussNewtonProblem pb;
  pb.residual = [&](const Vector& z) -> Vector {
    return c - Qm.transpose() * op.evaluate(xs + z) / n;
  };
  pb.objective = [](const Vector&, const Vector& r) { return r.squaredNorm(); };
  // Half the negative gradient, J^t Qm r / n; with J = T it is M^t r and the
  // step below reduces to the surrogate step pinv * r.
  auto descent = [&](const Vector& z, const Vector& r) -> Vector {
    return op.jacobian_transpose_apply(xs + z, Qm * r) / n;
  };
  pb.step = [&](const Vector& z, const Vector& r) -> Vector {
    return sys.pinv * (sys.pinv.transpose() * descent(z, r));
  };
  pb.gradient_norm = [&](const Vector& z, const Vector& r) { return descent(z, r).norm(); };
  pb.project = [rho](const Vector& z) { return project_to_ball(z, rho); };
  pb.on_boundary = [rho](const Vector& z) { return on_ball_boundary(z, rho); };

  SolverResult res = gauss_newton(pb, Vector::Zero(static_cast<Eigen::Index>(op.dim())), config);
  FitResult out;
  out.coefficients = std::move(res.x);
  out.projected_residual = res.objective;
  out.full_residual = (obs.values() - op.evaluate(xs + out.coefficients)).squaredNorm() / n;
  out.iterations = res.iterations;
  out.converged = res.converged;
  out.status = res.status;
  return out;
}

FitResult linear_fit(const ForwardOperator& op, const ObservationSet& obs,
                     const SubspaceLadder& ladder, const ModelSystem& sys) {
  const double n = static_cast<double>(obs.size());
  const Vector w = obs.values() - op.evaluate(op.x_star());
  const Vector c = ladder.orthonormal_coefficients(sys.level, w);
  FitResult out;
  out.coefficients = sys.pinv * c;
  out.iterations = 1;
  if (out.coefficients.norm() > op.rho()) {
    out.coefficients = project_to_ball(out.coefficients, op.rho());
    out.status = SolverStatus::boundary;
  }
  out.projected_residual = (c - sys.M * out.coefficients).squaredNorm();
  out.full_residual = (w - op.T() * out.coefficients).squaredNorm() / n;
  return out;
}

}  // namespace

FitResult fit_in_model(const ForwardOperator& op, const ObservationSet& obs,
                       const SubspaceLadder& ladder, const ModelSystem& system,
                       const SolverConfig& config) {
  check_obs(op, obs);
  if (ladder.n() != op.n()) throw DimensionError("fit_in_model: ladder and operator differ in n");
  if (op.is_linear()) return linear_fit(op, obs, ladder, system);
  return nonlinear_fit(op, obs, ladder, system, config);
}

FitResult fit_in_model(const ForwardOperator& op, const ObservationSet& obs,
                       const SubspaceLadder& ladder, const ModelProjector& projector,
                       const SolverConfig& config) {
  return fit_in_model(op, obs, ladder, projector.system, config);
}

EstimatorReport select_ordered(const OrderedModel& model, const ObservationSet& obs,
                               const OrderedPenaltySpec& spec, const OrderedOptions& options) {
  spec.validate();
  const ForwardOperator& op = model.op();
  check_obs(op, obs);
  const std::size_t n = obs.size();
  const double nd = static_cast<double>(n);

  EstimatorReport rep;
  rep.estimator = "ordered";
  rep.candidates.resize(model.levels());

  // Linear operators: all levels share w = y - F(x_star), its coordinates, and
  // T^t w / n, so the full residual follows from the Gram matrix of T.
  Vector w, c_all, h;
  double ww = 0.0;
  const bool linear = op.is_linear() && !std::isfinite(op.rho());
  if (linear) {
    w = obs.values() - op.evaluate(op.x_star());
    c_all = model.ladder().Q().transpose() * w / nd;
    h = op.T().transpose() * w / nd;
    ww = w.squaredNorm() / nd;
  }
  const Matrix* G = linear ? &op.linearization().gram() : nullptr;

  std::vector<Vector> coeffs(model.levels());
  double scale = 0.0;
  for (std::size_t m = 0; m < model.levels(); ++m) {
    const ModelSystem& sys = model.system(m);
    CandidateRecord& cand = rep.candidates[m];
    cand.index = m;
    cand.dim = sys.dim;
    if (linear) {
      const auto d = static_cast<Eigen::Index>(sys.dim);
      const Vector c = c_all.head(d);
      Vector z = sys.pinv * c;
      const double quad = z.dot(*G * z);
      cand.risk = std::max(0.0, ww - 2.0 * z.dot(h) + quad);
      cand.iterations = 1;
      cand.converged = true;
      coeffs[m] = std::move(z);
    } else {
      FitResult fit = fit_in_model(op, obs, model.ladder(), sys, options.solver);
      cand.risk = fit.full_residual;
      cand.iterations = fit.iterations;
      cand.converged = fit.converged;
      coeffs[m] = std::move(fit.coefficients);
    }
    cand.penalty = pen_ordered(sys.dim, spec, n);
    cand.criterion = cand.risk + cand.penalty;
    scale = std::max(scale, std::abs(cand.criterion));
  }
  if (linear) scale = std::max(scale, ww);

  // Criteria closer than the rounding level of the residual count as ties.
  const double tol = 1e-11 * scale;
  std::size_t best = 0;
  for (std::size_t m = 1; m < model.levels(); ++m)
    if (rep.candidates[m].criterion < rep.candidates[best].criterion - tol) best = m;

  const CandidateRecord& sel = rep.candidates[best];
  rep.selected = best;
  rep.selected_dim = sel.dim;
  rep.coefficients = coeffs[best];
  rep.estimate = op.x_star() + rep.coefficients;
  rep.empirical_risk = sel.risk;
  rep.penalty = sel.penalty;
  rep.criterion = sel.criterion;
  rep.solver_iterations = sel.iterations;
  rep.solver_converged = sel.converged;
  for (std::size_t m = 0; m < model.levels(); ++m) {
    if (!rep.candidates[m].converged)
      rep.warnings.push_back("solver did not converge at level " + std::to_string(m));
    if (options.keep_candidate_coefficients) rep.candidates[m].coefficients = std::move(coeffs[m]);
  }
  return rep;
}

EstimatorReport select_ordered(const ForwardOperator& op, const ObservationSet& obs,
                               const SubspaceLadder& ladder, const OrderedPenaltySpec& spec,
                               const OrderedOptions& options) {
  return select_ordered(OrderedModel(op, ladder), obs, spec, options);
}

M0Choice choose_m0(std::size_t n, double p, const std::vector<std::size_t>& dims) {
  if (!(p > 0.0)) throw DomainError("choose_m0 needs p > 0");
  if (dims.empty()) throw DomainError("choose_m0 needs a nonempty ladder");
  const double bound = std::pow(static_cast<double>(n), 1.0 / (2.0 * p)) * (1.0 + 1e-12);
  M0Choice out;
  out.fallback = true;
  for (std::size_t m = 0; m < dims.size(); ++m) {
    if (static_cast<double>(dims[m]) <= bound) {
      out.level = m;
      out.fallback = false;
    }
  }
  return out;
}

M0Choice choose_m0(std::size_t n, double p, const SubspaceLadder& ladder) {
  return choose_m0(n, p, ladder.dims());
}

}  // namespace ipest
