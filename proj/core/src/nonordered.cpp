#include "ipest/nonordered.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ipest/errors.hpp"
#include "ipest/noise.hpp"

namespace ipest {

SubsetUniverse parse_subset_universe(std::string_view name) {
  if (name == "singletons-prefixes" || name == "singletons_prefixes" || name == "default")
    return SubsetUniverse::singletons_prefixes;
  if (name == "power-set" || name == "power_set") return SubsetUniverse::power_set;
  if (name == "custom") return SubsetUniverse::custom;
  throw ConfigError("unknown subset universe '" + std::string(name) + "'");
}

std::string_view to_string(SubsetUniverse u) {
  switch (u) {
    case SubsetUniverse::singletons_prefixes: return "singletons-prefixes";
    case SubsetUniverse::power_set: return "power-set";
    case SubsetUniverse::custom: return "custom";
  }
  return "unknown";
}

NonOrderedMethod parse_nonordered_method(std::string_view name) {
  if (name == "auto" || name == "automatic") return NonOrderedMethod::automatic;
  if (name == "exhaustive") return NonOrderedMethod::exhaustive;
  if (name == "threshold") return NonOrderedMethod::threshold;
  throw ConfigError("unknown non-ordered method '" + std::string(name) + "'");
}

bool subset_precedes(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

namespace {

std::vector<std::vector<std::size_t>> singletons_and_prefixes(std::size_t d) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t j = 0; j < d; ++j) out.push_back({j});
  for (std::size_t k = 2; k <= d; ++k) {
    std::vector<std::size_t> p(k);
    std::iota(p.begin(), p.end(), std::size_t{0});
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::size_t> normalized_subset(std::vector<std::size_t> s, std::size_t d) {
  if (s.empty()) throw DomainError("empty subsets are not models");
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end())
    throw DomainError("subset has repeated indices");
  if (s.back() >= d)
    throw DomainError("subset index " + std::to_string(s.back()) + " outside {0.." +
                      std::to_string(d - 1) + "}");
  return s;
}

// Latin hypercube in the cube of half-width h around c.
std::vector<Vector> latin_hypercube(const Vector& c, double h, std::size_t N, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto D = c.size();
  std::vector<Vector> pts(N, c);
  std::vector<std::size_t> perm(N);
  for (Eigen::Index k = 0; k < D; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < N; ++i) {
      const double u = (static_cast<double>(perm[i]) + unif(rng)) / static_cast<double>(N);
      pts[i][k] = c[k] + h * (2.0 * u - 1.0);
    }
  }
  return pts;
}

}  // namespace

NonOrderedContext build_nonordered_context(const ForwardOperator& op,
                                           const SubspaceLadder& ladder, std::size_t m0,
                                           const NonOrderedOptions& options) {
  if (op.n() != ladder.n()) throw DimensionError("operator and ladder differ in n");
  if (!(options.c_L >= 0.0)) throw DomainError("c_L must be nonnegative");
  NonOrderedContext ctx{op, ladder};
  ctx.m0 = m0;
  ctx.system = build_model_system(op.linearization(), ladder, m0);
  ctx.d = ctx.system.dim;
  ctx.linear = op.is_linear();
  ctx.c_L = options.c_L;
  const std::size_t D = op.dim();
  if (ctx.d > D)
    throw DomainError("reference model dimension " + std::to_string(ctx.d) +
                      " exceeds the coefficient dimension " + std::to_string(D));

  Svd svd = thin_svd(ctx.system.M);
  ctx.U = std::move(svd.U);
  ctx.s = std::move(svd.s);
  ctx.E = std::move(svd.V);
  const double smin = ctx.s[ctx.s.size() - 1];
  if (!(smin > 1e-12 * ctx.s[0]))
    throw ConditioningError("reference level " + std::to_string(m0) +
                            ": T restricted to Y_m0 is numerically singular");
  ctx.condition_number = ctx.s[0] / smin;

  const double n = static_cast<double>(op.n());
  const double sqn = std::sqrt(n);
  const auto d = static_cast<Eigen::Index>(ctx.d);
  // A_{m0}^t in orthonormal coordinates is U S^{-1} V^t / sqrt(n).
  auto coord_column = [&](const Vector& g) -> Vector {
    Vector v = ctx.E.transpose() * g;
    for (Eigen::Index j = 0; j < d; ++j) v[j] /= ctx.s[j];
    return (ctx.U * v / sqn).cwiseAbs();
  };

  if (ctx.linear) {
    ctx.S_full = Matrix(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
      ctx.S_full.col(j) = ctx.U.col(j).cwiseAbs() / (ctx.s[j] * sqn);
  } else {
    ctx.n_samples = options.n_samples;
    const double rho = std::isfinite(op.rho()) ? op.rho() : 1.0;
    const double fd = std::min(options.fd_step, 1e-4 * rho);
    const double half = 0.999 * rho / std::sqrt(static_cast<double>(D));
    std::vector<Vector> pts =
        latin_hypercube(op.x_star(), half, options.n_samples, derive_seed(options.seed, {m0}));
    pts.push_back(op.x_star());
    const auto Qm = ladder.Q().leftCols(d);
    ctx.S_full = Matrix::Zero(d, d);
    for (const Vector& x : pts) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const Vector dir = ctx.E.col(j);
        const Vector dF = (op.evaluate(x + fd * dir) - op.evaluate(x - fd * dir)) / (2.0 * fd);
        const Vector g = ctx.system.pinv * (Qm.transpose() * dF / n);
        ctx.S_full.col(j) = ctx.S_full.col(j).cwiseMax(coord_column(g));
      }
    }
    if (!ctx.S_full.allFinite())
      throw DiagnosticError("S_m sampling produced non-finite entries");
    if (ctx.condition_number > 1e6)
      ctx.warnings.push_back("nonlinear non-ordered fit on a badly conditioned reference model "
                             "(condition number " + std::to_string(ctx.condition_number) + ")");
  }

  const Matrix SS = ctx.S_full.transpose() * ctx.S_full;
  ctx.lambda = SS.diagonal();
  const double dmax = ctx.lambda.maxCoeff();
  Matrix off = SS;
  off.diagonal().setZero();
  ctx.decomposable = off.cwiseAbs().maxCoeff() <= 1e-10 * dmax;

  ctx.universe = options.universe;
  switch (options.universe) {
    case SubsetUniverse::singletons_prefixes:
      ctx.subsets = singletons_and_prefixes(ctx.d);
      break;
    case SubsetUniverse::power_set:
      break;
    case SubsetUniverse::custom:
      if (options.custom_subsets.empty()) throw ConfigError("custom subset universe is empty");
      for (const auto& s : options.custom_subsets) ctx.subsets.push_back(normalized_subset(s, ctx.d));
      break;
  }
  return ctx;
}

Matrix build_S_m(const NonOrderedContext& ctx, const std::vector<std::size_t>& subset) {
  const auto s = normalized_subset(subset, ctx.d);
  Matrix out(ctx.S_full.rows(), static_cast<Eigen::Index>(s.size()));
  for (std::size_t k = 0; k < s.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = ctx.S_full.col(static_cast<Eigen::Index>(s[k]));
  return out;
}

namespace {
double weight_L(const NonOrderedContext& ctx, std::size_t card) {
  return ctx.c_L * std::log(static_cast<double>(ctx.d) / static_cast<double>(card)) + 1.0;
}
}  // namespace

SubsetStats subset_stats(const NonOrderedContext& ctx, const std::vector<std::size_t>& subset) {
  SubsetStats st;
  st.L = weight_L(ctx, subset.size());
  if (ctx.decomposable) {
    for (std::size_t j : subset) {
      if (j >= ctx.d) throw DomainError("subset index out of range");
      st.t += ctx.lambda[static_cast<Eigen::Index>(j)];
      st.rho = std::max(st.rho, ctx.lambda[static_cast<Eigen::Index>(j)]);
    }
    if (subset.empty()) throw DomainError("empty subsets are not models");
    return st;
  }
  const Matrix S = build_S_m(ctx, subset);
  st.t = S.squaredNorm();
  st.rho = max_eigenvalue(S.transpose() * S);
  return st;
}

double pen_nonordered(const SubsetStats& st, double r, double sigma) {
  return r * sigma * sigma * (1.0 + st.L) * (st.t + st.rho);
}

double pen_nonordered(const std::vector<std::size_t>& subset, const NonOrderedContext& ctx,
                      double r, double sigma) {
  return pen_nonordered(subset_stats(ctx, subset), r, sigma);
}

Vector nonordered_coordinates(const NonOrderedContext& ctx, const ObservationSet& obs) {
  if (obs.size() != ctx.op.n()) throw DimensionError("observations do not match the operator grid");
  const Vector w = obs.values() - ctx.op.evaluate(ctx.op.x_star());
  const Vector c = ctx.ladder.orthonormal_coefficients(ctx.m0, w);
  Vector x = ctx.U.transpose() * c;
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] /= ctx.s[j];
  return x;
}

namespace {

struct Scored {
  std::vector<std::size_t> subset;
  double risk = 0.0;
  double penalty = 0.0;
  double criterion = 0.0;
};

// Residual ||A w||^2 - sum_{j in m} x_j^2 = sum of x_j^2 outside m, summed in index order.
double linear_risk(const Vector& x2, const std::vector<std::size_t>& subset) {
  double acc = 0.0;
  std::size_t k = 0;
  for (Eigen::Index j = 0; j < x2.size(); ++j) {
    if (k < subset.size() && subset[k] == static_cast<std::size_t>(j)) {
      ++k;
      continue;
    }
    acc += x2[j];
  }
  return acc;
}

Scored score_linear(const NonOrderedContext& ctx, const Vector& x2,
                    const std::vector<std::size_t>& subset, double r, double sigma) {
  Scored s;
  s.subset = subset;
  s.risk = linear_risk(x2, subset);
  s.penalty = pen_nonordered(subset_stats(ctx, subset), r, sigma);
  s.criterion = s.risk + s.penalty;
  return s;
}

bool better(const Scored& a, const Scored& b, double tol) {
  if (a.criterion < b.criterion - tol) return true;
  if (a.criterion > b.criterion + tol) return false;
  return subset_precedes(a.subset, b.subset);
}

std::vector<std::size_t> mask_subset(std::uint64_t mask, std::size_t d) {
  std::vector<std::size_t> s;
  for (std::size_t j = 0; j < d; ++j)
    if (mask >> j & 1U) s.push_back(j);
  return s;
}

// Exact minimizer over all nonempty subsets when the penalty is decomposable:
// for fixed |m| = k and fixed maximizer j* of lambda, the criterion is a
// constant plus sum_{j in m} (c_k lambda_j - x_j^2).
Scored threshold_search(const NonOrderedContext& ctx, const Vector& x2, double r, double sigma,
                        double tol) {
  const std::size_t d = ctx.d;
  Scored best;
  bool have = false;
  std::vector<std::size_t> pool;
  std::vector<double> score(d);
  for (std::size_t k = 1; k <= d; ++k) {
    const double ck = r * sigma * sigma * (1.0 + weight_L(ctx, k));
    for (std::size_t j = 0; j < d; ++j)
      score[j] = ck * ctx.lambda[static_cast<Eigen::Index>(j)] - x2[static_cast<Eigen::Index>(j)];
    for (std::size_t js = 0; js < d; ++js) {
      const double lmax = ctx.lambda[static_cast<Eigen::Index>(js)];
      pool.clear();
      for (std::size_t j = 0; j < d; ++j)
        if (j != js && ctx.lambda[static_cast<Eigen::Index>(j)] <= lmax) pool.push_back(j);
      if (pool.size() < k - 1) continue;
      std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1), pool.end(),
                        [&](std::size_t a, std::size_t b) {
                          return score[a] < score[b] || (score[a] == score[b] && a < b);
                        });
      std::vector<std::size_t> subset(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1));
      subset.push_back(js);
      std::sort(subset.begin(), subset.end());
      Scored cand = score_linear(ctx, x2, subset, r, sigma);
      if (!have || better(cand, best, tol)) {
        best = std::move(cand);
        have = true;
      }
    }
  }
  return best;
}

struct NonlinearFit {
  Vector z;
  double risk = 0.0;
  int iterations = 0;
  bool converged = true;
};

NonlinearFit nonlinear_subset_fit(const NonOrderedContext& ctx, const ObservationSet& obs,
                                  const std::vector<std::size_t>& subset,
                                  const SolverConfig& config) {
  const ForwardOperator& op = ctx.op;
  const double n = static_cast<double>(obs.size());
  const auto d = static_cast<Eigen::Index>(ctx.d);
  const auto Qm = ctx.ladder.Q().leftCols(d);
  Matrix Em(ctx.E.rows(), static_cast<Eigen::Index>(subset.size()));
  for (std::size_t k = 0; k < subset.size(); ++k)
    Em.col(static_cast<Eigen::Index>(k)) = ctx.E.col(static_cast<Eigen::Index>(subset[k]));
  const double rho = op.rho();
  const Vector& xs = op.x_star();

  GaussNewtonProblem pb;
  pb.residual = [&](const Vector& u) -> Vector {
    return ctx.system.pinv * (Qm.transpose() * (obs.values() - op.evaluate(xs + Em * u)) / n);
  };
  pb.objective = [](const Vector&, const Vector& r) { return r.squaredNorm(); };
  // Half the negative gradient in subset coordinates. Under J = T it equals
  // Em^t r, the surrogate step.
  pb.step = [&](const Vector& u, const Vector& r) -> Vector {
    const Vector w = Qm * (ctx.system.pinv.transpose() * r) / n;
    return Em.transpose() * op.jacobian_transpose_apply(xs + Em * u, w);
  };
  pb.gradient_norm = [&](const Vector& u, const Vector& r) { return pb.step(u, r).norm(); };
  pb.project = [rho](const Vector& u) { return project_to_ball(u, rho); };
  pb.on_boundary = [rho](const Vector& u) {
    return std::isfinite(rho) && u.norm() >= rho * (1.0 - 1e-12);
  };
  SolverResult res = gauss_newton(pb, Vector::Zero(Em.cols()), config);
  NonlinearFit out;
  out.z = Em * res.x;
  out.risk = res.objective;
  out.iterations = res.iterations;
  out.converged = res.converged;
  return out;
}

}  // namespace

EstimatorReport select_nonordered(const NonOrderedContext& ctx, const ObservationSet& obs,
                                  double r, double sigma, const NonOrderedSelectOptions& options) {
  if (!(r > 2.0)) throw DomainError("non-ordered penalty needs r > 2");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be nonnegative");
  EstimatorReport rep;
  rep.estimator = "nonordered";
  rep.m0 = ctx.m0;
  rep.warnings = ctx.warnings;
  const bool power = ctx.universe == SubsetUniverse::power_set;

  NonOrderedMethod method = options.method;
  if (method == NonOrderedMethod::automatic)
    method = ctx.linear && ctx.decomposable ? NonOrderedMethod::threshold : NonOrderedMethod::exhaustive;
  if (method == NonOrderedMethod::threshold && !(ctx.linear && ctx.decomposable))
    throw ConfigError("threshold method needs a linear operator and a decomposable penalty");
  if (method == NonOrderedMethod::exhaustive && power && ctx.d > kMaxEnumeratedDim)
    throw ConfigError("power-set enumeration is limited to d_m0 <= " +
                      std::to_string(kMaxEnumeratedDim) + " (d_m0 = " + std::to_string(ctx.d) + ")");

  if (ctx.linear) {
    const Vector x = nonordered_coordinates(ctx, obs);
    const Vector x2 = x.cwiseAbs2();
    const double tol = 1e-12 * (x2.sum() + 1e-300);
    Scored best;
    bool have = false;
    auto consider = [&](const std::vector<std::size_t>& subset, std::size_t index) {
      Scored s = score_linear(ctx, x2, subset, r, sigma);
      CandidateRecord cand;
      cand.index = index;
      cand.dim = subset.size();
      cand.subset = subset;
      cand.risk = s.risk;
      cand.penalty = s.penalty;
      cand.criterion = s.criterion;
      cand.iterations = 1;
      if (options.keep_candidate_coefficients) {
        cand.coefficients = Vector::Zero(ctx.E.rows());
        for (std::size_t j : subset) cand.coefficients += x[static_cast<Eigen::Index>(j)] * ctx.E.col(static_cast<Eigen::Index>(j));
      }
      if (!power) rep.candidates.push_back(std::move(cand));
      if (!have || better(s, best, tol)) {
        best = std::move(s);
        have = true;
        rep.selected = index;
      }
    };
    if (!power) {
      for (std::size_t i = 0; i < ctx.subsets.size(); ++i) consider(ctx.subsets[i], i);
    } else if (method == NonOrderedMethod::threshold) {
      best = threshold_search(ctx, x2, r, sigma, tol);
      have = true;
      std::uint64_t mask = 0;
      for (std::size_t j : best.subset) mask |= std::uint64_t{1} << j;
      rep.selected = static_cast<std::size_t>(mask - 1);
    } else {
      const std::uint64_t total = std::uint64_t{1} << ctx.d;
      for (std::uint64_t mask = 1; mask < total; ++mask)
        consider(mask_subset(mask, ctx.d), static_cast<std::size_t>(mask - 1));
    }
    rep.selected_subset = best.subset;
    rep.selected_dim = best.subset.size();
    rep.coefficients = Vector::Zero(ctx.E.rows());
    for (std::size_t j : best.subset)
      rep.coefficients += x[static_cast<Eigen::Index>(j)] * ctx.E.col(static_cast<Eigen::Index>(j));
    rep.empirical_risk = best.risk;
    rep.penalty = best.penalty;
    rep.criterion = best.criterion;
    rep.solver_iterations = 1;
    rep.solver_converged = true;
  } else {
    std::vector<std::vector<std::size_t>> universe = ctx.subsets;
    if (power) {
      const std::uint64_t total = std::uint64_t{1} << ctx.d;
      for (std::uint64_t mask = 1; mask < total; ++mask) universe.push_back(mask_subset(mask, ctx.d));
    }
    Scored best;
    NonlinearFit best_fit;
    bool have = false;
    double scale = 0.0;
    std::vector<std::pair<Scored, NonlinearFit>> fits;
    fits.reserve(universe.size());
    for (const auto& subset : universe) {
      NonlinearFit fit = nonlinear_subset_fit(ctx, obs, subset, options.solver);
      Scored s;
      s.subset = subset;
      s.risk = fit.risk;
      s.penalty = pen_nonordered(subset_stats(ctx, subset), r, sigma);
      s.criterion = s.risk + s.penalty;
      scale = std::max(scale, std::abs(s.criterion));
      fits.emplace_back(std::move(s), std::move(fit));
    }
    const double tol = 1e-12 * scale;
    for (std::size_t i = 0; i < fits.size(); ++i) {
      const auto& [s, fit] = fits[i];
      CandidateRecord cand;
      cand.index = i;
      cand.dim = s.subset.size();
      cand.subset = s.subset;
      cand.risk = s.risk;
      cand.penalty = s.penalty;
      cand.criterion = s.criterion;
      cand.iterations = fit.iterations;
      cand.converged = fit.converged;
      if (options.keep_candidate_coefficients) cand.coefficients = fit.z;
      rep.candidates.push_back(std::move(cand));
      if (!fit.converged)
        rep.warnings.push_back("solver did not converge for subset #" + std::to_string(i));
      if (!have || better(s, best, tol)) {
        best = s;
        best_fit = fit;
        have = true;
        rep.selected = i;
      }
    }
    rep.selected_subset = best.subset;
    rep.selected_dim = best.subset.size();
    rep.coefficients = best_fit.z;
    rep.empirical_risk = best.risk;
    rep.penalty = best.penalty;
    rep.criterion = best.criterion;
    rep.solver_iterations = best_fit.iterations;
    rep.solver_converged = best_fit.converged;
  }
  rep.estimate = ctx.op.x_star() + rep.coefficients;
  return rep;
}

}  // namespace ipest
