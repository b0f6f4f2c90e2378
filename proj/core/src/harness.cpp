#include "ipest/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "ipest/diagnostics.hpp"
#include "ipest/errors.hpp"
#include "ipest/parallel.hpp"
#include "ipest/source.hpp"

namespace ipest {

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "ordered") return EstimatorKind::ordered;
  if (name == "nonordered" || name == "non-ordered") return EstimatorKind::nonordered;
  if (name == "tikhonov") return EstimatorKind::tikhonov;
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::ordered: return "ordered";
    case EstimatorKind::nonordered: return "nonordered";
    case EstimatorKind::tikhonov: return "tikhonov";
  }
  return "unknown";
}

ForwardOperator build_operator(const OperatorSpec& spec, const DesignGrid& grid) {
  ForwardOperator::Options opt;
  opt.x_star = spec.x_star;
  opt.rho = spec.rho;
  opt.c_T = spec.c_T;
  switch (spec.kind) {
    case OperatorKind::diagonal:
      if (spec.b.size() > 0) {
        if (static_cast<std::size_t>(spec.b.size()) != spec.D)
          throw ConfigError("operator.b has " + std::to_string(spec.b.size()) +
                            " values but D = " + std::to_string(spec.D));
        return ForwardOperator::diagonal(grid, spec.b, spec.p, opt);
      }
      return ForwardOperator::diagonal_power(grid, spec.D, spec.p, opt);
    case OperatorKind::volterra:
      return ForwardOperator::volterra(grid, spec.D, spec.p, opt);
    case OperatorKind::hammerstein:
      return ForwardOperator::hammerstein(grid, spec.D, spec.link, spec.p, opt);
  }
  throw ConfigError("unknown operator kind");
}

SubspaceLadder build_ladder(const LadderSpec& spec, const ForwardOperator& op) {
  switch (spec.family) {
    case LadderFamily::singular: {
      std::vector<std::size_t> dims = spec.dims;
      if (dims.empty()) {
        if (spec.max_dim == 0) throw ConfigError("singular ladder needs dims or max_dim");
        for (std::size_t d = 1; d <= spec.max_dim; ++d) dims.push_back(d);
      }
      return SubspaceLadder::singular(op.linearization(), std::move(dims));
    }
    case LadderFamily::histogram:
      return SubspaceLadder::histogram(op.grid(), spec.depth);
    case LadderFamily::custom:
      throw ConfigError("custom ladders cannot be described in an experiment config");
  }
  throw ConfigError("unknown ladder family");
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw ConfigError("n_grid must not be empty");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] == 0) throw ConfigError("n_grid entries must be positive");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw ConfigError("n_grid must be strictly increasing");
  }
  if (replicates == 0) throw ConfigError("replicates must be >= 1");
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be nonnegative");
  if (op.D == 0) throw ConfigError("operator D must be positive");
  if (!(op.p > 0.0)) throw ConfigError("operator p must be positive");
  if (!(source.nu > 0.0 && source.nu <= 0.5)) throw ConfigError("source nu must lie in (0, 1/2]");
  if (!(source.radius > 0.0)) throw ConfigError("source radius must be positive");
  std::size_t max_ladder = 0;
  if (ladder.family == LadderFamily::histogram) max_ladder = std::size_t{1} << ladder.depth;
  else if (!ladder.dims.empty()) max_ladder = ladder.dims.back();
  else max_ladder = ladder.max_dim;
  if (n_grid.front() < max_ladder)
    throw ConfigError("every n must be >= the largest ladder dimension (" +
                      std::to_string(max_ladder) + ")");
  if (op.kind == OperatorKind::diagonal && n_grid.front() < op.D)
    throw ConfigError("the diagonal operator needs n >= D");
  if (estimator == EstimatorKind::ordered || estimator == EstimatorKind::nonordered ||
      estimator == EstimatorKind::tikhonov) {
    if (!(params.r > 2.0)) throw ConfigError("estimator r must exceed 2");
  }
  if (estimator == EstimatorKind::ordered && !(params.L > 0.0))
    throw ConfigError("ordered selection needs L > 0");
  if (estimator == EstimatorKind::tikhonov) params.alpha.validate();
}

struct Experiment::Setup {
  std::size_t n;
  DesignGrid grid;
  ForwardOperator op;
  SubspaceLadder ladder;
  Vector clean;
  std::size_t m0 = 0;
  bool m0_fallback = false;
  std::unique_ptr<OrderedModel> ordered;
  std::unique_ptr<NonOrderedContext> nonordered;
  std::unique_ptr<TikhonovContext> tikhonov;

  Setup(std::size_t n_, DesignGrid g, ForwardOperator o, SubspaceLadder l)
      : n(n_), grid(std::move(g)), op(std::move(o)), ladder(std::move(l)) {}
};

Experiment::~Experiment() = default;

namespace {
std::size_t level_with_dim(const SubspaceLadder& ladder, std::size_t d) {
  for (std::size_t m = 0; m < ladder.levels(); ++m)
    if (ladder.dim(m) == d) return m;
  throw ConfigError("no ladder level has dimension " + std::to_string(d));
}
}  // namespace

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t ref_n = config_.reference_n ? config_.reference_n : config_.n_grid.back();

  for (std::size_t n : config_.n_grid) {
    DesignGrid grid = DesignGrid::uniform(n);
    ForwardOperator op = build_operator(config_.op, grid);
    SubspaceLadder ladder = build_ladder(config_.ladder, op);
    setups_.push_back(std::make_unique<Setup>(n, std::move(grid), std::move(op), std::move(ladder)));
  }

  // x0 is generated once on the reference grid so it is the same for every n.
  std::optional<ForwardOperator> ref_op;
  for (const auto& s : setups_)
    if (s->n == ref_n) ref_op = s->op;
  if (!ref_op) ref_op = build_operator(config_.op, DesignGrid::uniform(ref_n));
  const LinearizationMatrix& Tref = ref_op->linearization();
  SourceSpec src;
  src.nu = config_.source.nu;
  src.radius = config_.source.radius;
  switch (config_.source.omega) {
    case OmegaKind::critical:
      src.omega = critical_omega(Tref, config_.source.omega_seed, config_.source.radius);
      break;
    case OmegaKind::gaussian:
      src.omega = gaussian_omega(config_.op.D, config_.source.omega_seed, config_.source.radius);
      break;
    case OmegaKind::explicit_values:
      src.omega = config_.source.omega_values;
      break;
  }
  x0_ = make_source_solution(Tref, src, ref_op->x_star());
  if (!ref_op->is_linear() && !ref_op->in_trust_ball(x0_))
    throw ConfigError("planted solution has ||x0 - x_star|| = " +
                      std::to_string((x0_ - ref_op->x_star()).norm()) +
                      ", outside the trust radius " + std::to_string(ref_op->rho()));

  for (auto& s : setups_) {
    s->clean = s->op.evaluate(x0_);
    if (config_.estimator != EstimatorKind::ordered) {
      if (config_.params.m0_dim) {
        s->m0 = level_with_dim(s->ladder, *config_.params.m0_dim);
      } else {
        const M0Choice c = choose_m0(s->n, s->op.p(), s->ladder);
        s->m0 = c.level;
        s->m0_fallback = c.fallback;
      }
    }
    switch (config_.estimator) {
      case EstimatorKind::ordered:
        s->ordered = std::make_unique<OrderedModel>(s->op, s->ladder);
        break;
      case EstimatorKind::nonordered: {
        NonOrderedOptions opt = config_.params.nonordered;
        opt.seed = derive_seed(config_.seed, {0x5a, s->n});
        s->nonordered = std::make_unique<NonOrderedContext>(
            build_nonordered_context(s->op, s->ladder, s->m0, opt));
        break;
      }
      case EstimatorKind::tikhonov:
        s->tikhonov = std::make_unique<TikhonovContext>(make_tikhonov_context(s->op, s->ladder, s->m0));
        break;
    }
  }
}

const Experiment::Setup& Experiment::setup(std::size_t n) const {
  for (const auto& s : setups_)
    if (s->n == n) return *s;
  throw DomainError("n = " + std::to_string(n) + " is not on the experiment's n_grid");
}

const ForwardOperator& Experiment::op(std::size_t n) const { return setup(n).op; }
const SubspaceLadder& Experiment::ladder(std::size_t n) const { return setup(n).ladder; }
std::size_t Experiment::m0_level(std::size_t n) const { return setup(n).m0; }

Instance Experiment::instance(std::size_t n, std::size_t replicate) const {
  const Setup& s = setup(n);
  NoiseSpec noise{config_.noise_kind, config_.sigma, derive_seed(config_.seed, {n, replicate})};
  Vector y = s.clean + sample_noise(noise, n);
  return Instance{x0_, s.clean, ObservationSet(s.grid, std::move(y), config_.sigma)};
}

EstimatorReport Experiment::estimate(std::size_t n, const ObservationSet& obs,
                                     bool keep_candidates) const {
  const Setup& s = setup(n);
  const EstimatorParams& p = config_.params;
  EstimatorReport rep;
  switch (config_.estimator) {
    case EstimatorKind::ordered: {
      OrderedOptions opt;
      opt.solver = p.solver;
      opt.keep_candidate_coefficients = keep_candidates;
      rep = select_ordered(*s.ordered, obs, OrderedPenaltySpec{p.r, p.L, config_.sigma}, opt);
      break;
    }
    case EstimatorKind::nonordered: {
      NonOrderedSelectOptions opt;
      opt.method = p.method;
      opt.solver = p.solver;
      opt.keep_candidate_coefficients = keep_candidates;
      rep = select_nonordered(*s.nonordered, obs, p.r, config_.sigma, opt);
      break;
    }
    case EstimatorKind::tikhonov: {
      TikhonovOptions opt;
      opt.solver = p.solver;
      opt.keep_candidate_coefficients = keep_candidates;
      rep = select_tikhonov(*s.tikhonov, obs, p.alpha, p.r, config_.sigma, opt);
      break;
    }
  }
  if (s.m0_fallback)
    rep.warnings.push_back("no ladder level satisfies d <= n^(1/(2p)); using the smallest level");
  return rep;
}

namespace {
// Best squared error over all nonempty subsets for the linear non-ordered family:
// ||e||^2 + sum_{j in m} (x_j^2 - 2 x_j <E_j, e>).
double nonordered_power_set_best(const NonOrderedContext& ctx, const Vector& x, const Vector& e) {
  const Vector proj = ctx.E.transpose() * e;
  double base = e.squaredNorm();
  double acc = 0.0;
  double least = std::numeric_limits<double>::infinity();
  bool any = false;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double term = x[j] * x[j] - 2.0 * x[j] * proj[j];
    if (term < 0.0) {
      acc += term;
      any = true;
    }
    least = std::min(least, term);
  }
  return std::max(0.0, base + (any ? acc : least));
}
}  // namespace

ReplicateRecord Experiment::run_replicate(std::size_t n, std::size_t replicate) const {
  ReplicateRecord rec;
  rec.n = n;
  rec.replicate = replicate;
  try {
    const Setup& s = setup(n);
    const Instance inst = instance(n, replicate);
    const EstimatorReport rep = estimate(n, inst.obs, true);
    rec.sq_error = (rep.estimate - x0_).squaredNorm();
    rec.selected = rep.selected;
    rec.selected_dim = rep.selected_dim;
    rec.selected_alpha = rep.selected_alpha;
    rec.converged = rep.solver_converged;

    const Vector e = x0_ - s.op.x_star();
    double best = std::numeric_limits<double>::infinity();
    if (config_.estimator == EstimatorKind::nonordered && s.nonordered->linear &&
        s.nonordered->universe == SubsetUniverse::power_set) {
      best = nonordered_power_set_best(*s.nonordered, nonordered_coordinates(*s.nonordered, inst.obs), e);
    } else {
      for (const auto& c : rep.candidates)
        if (c.coefficients.size() > 0) best = std::min(best, (c.coefficients - e).squaredNorm());
    }
    // The selected member belongs to the family.
    best = std::min(best, rec.sq_error);
    rec.best_sq_error = best;
    rec.ratio = best > 0.0 ? rec.sq_error / best : 1.0;
    rec.obs_risk = (s.op.evaluate(rep.estimate) - s.clean).squaredNorm() / static_cast<double>(n);

    if (!std::isfinite(rec.sq_error) || !std::isfinite(rec.obs_risk)) {
      rec.failed = true;
      rec.message = "non-finite error";
    } else if (!rec.converged) {
      rec.failed = true;
      rec.message = "solver did not converge at the selected model";
    }
  } catch (const std::exception& ex) {
    rec.failed = true;
    rec.message = ex.what();
  }
  return rec;
}

Instance generate_instance(const ExperimentConfig& config, std::size_t n, std::size_t replicate) {
  ExperimentConfig c = config;
  c.n_grid = {n};
  if (c.reference_n == 0) c.reference_n = config.n_grid.empty() ? n : config.n_grid.back();
  Experiment exp(std::move(c));
  return exp.instance(n, replicate);
}

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points) {
  std::set<double> distinct;
  for (const auto& [n, err] : points) {
    if (!(n > 0.0)) throw DegenerateFitError("fit_slope: sample sizes must be positive");
    if (!(err > 0.0) || !std::isfinite(err))
      throw DegenerateFitError("fit_slope: errors must be positive and finite");
    distinct.insert(n);
  }
  if (distinct.size() < 3) throw DegenerateFitError("fit_slope: needs at least 3 distinct n");
  const double k = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [n, err] : points) {
    mx += std::log(n);
    my += std::log(err);
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [n, err] : points) {
    const double dx = std::log(n) - mx, dy = std::log(err) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ss_res = std::max(0.0, syy - f.slope * sxy);
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

namespace {
double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}
}  // namespace

RateReport run_sweep(const ExperimentConfig& config) {
  Experiment exp(config);
  const ExperimentConfig& c = exp.config();
  RateReport rep;
  rep.name = c.name;
  rep.estimator = std::string(to_string(c.estimator));
  rep.seed = c.seed;
  rep.sigma = c.sigma;
  rep.nu = c.source.nu;
  rep.p = c.op.p;
  rep.replicates = c.replicates;
  rep.theoretical_exponent = -2.0 * rate_exponent(c.source.nu, c.op.p);
  const Vector e0 = exp.x0() - exp.op(c.n_grid.front()).x_star();
  rep.x0_norm = e0.norm();

  const std::size_t R = c.replicates;
  const std::size_t total = c.n_grid.size() * R;
  rep.records.resize(total);
  parallel_for(total, c.threads, [&](std::size_t i) {
    rep.records[i] = exp.run_replicate(c.n_grid[i / R], i % R);
  });

  std::size_t failed_total = 0;
  std::vector<std::pair<double, double>> points;
  for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
    NSummary s;
    s.n = c.n_grid[k];
    s.m0_dim = c.estimator == EstimatorKind::ordered ? 0 : exp.ladder(s.n).dim(exp.m0_level(s.n));
    std::vector<double> errs, ratios, dims;
    double risk = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      const ReplicateRecord& rec = rep.records[k * R + r];
      if (rec.failed) {
        ++s.failed;
        continue;
      }
      errs.push_back(rec.sq_error);
      ratios.push_back(rec.ratio);
      dims.push_back(static_cast<double>(rec.selected_dim));
      risk += rec.obs_risk;
    }
    s.ok = errs.size();
    failed_total += s.failed;
    if (!errs.empty()) {
      s.mean_sq_error = pairwise_sum(errs.begin(), errs.end()) / static_cast<double>(errs.size());
      s.median_sq_error = median(errs);
      s.oracle_ratio = median(ratios);
      s.mean_obs_risk = risk / static_cast<double>(errs.size());
      s.median_selected_dim = median(dims);
      s.p95_selected_dim = quantile(dims, 0.95);
      points.emplace_back(static_cast<double>(s.n), s.mean_sq_error);
    }
    rep.per_n.push_back(s);
  }
  rep.failed_fraction = static_cast<double>(failed_total) / static_cast<double>(total);
  rep.sweep_failed = rep.failed_fraction > kMaxFailedFraction;

  // Errors at the rounding level carry no rate information.
  const double floor = 1e-20 * std::max(rep.x0_norm * rep.x0_norm, 1e-300);
  bool numerically_zero = false;
  for (const auto& [n, e] : points) numerically_zero = numerically_zero || e <= floor;
  if (numerically_zero) {
    rep.slope_note = "degenerate: errors are numerically zero";
  } else {
    try {
      rep.slope = fit_slope(points);
      rep.slope_fitted = true;
      rep.slope_note = "ok";
    } catch (const DegenerateFitError& ex) {
      rep.slope_note = std::string("degenerate: ") + ex.what();
    }
  }

  if (c.diagnostics) {
    const std::size_t n0 = c.n_grid.front();
    rep.diagnostics.computed = true;
    rep.diagnostics.n = n0;
    rep.diagnostics.c_T_estimate = diagnose_af(exp.op(n0), c.af_pairs, derive_seed(c.seed, {0xaf}));
    rep.diagnostics.as = as_diagnostic(exp.op(n0).linearization(), exp.ladder(n0), exp.op(n0).grid());
  }
  if (rep.sweep_failed)
    rep.warnings.push_back("more than 5% of replicates failed");
  return rep;
}

}  // namespace ipest
