#include "ipest/subspaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ipest/errors.hpp"

namespace ipest {

LadderFamily parse_ladder_family(std::string_view name) {
  if (name == "singular") return LadderFamily::singular;
  if (name == "histogram") return LadderFamily::histogram;
  if (name == "custom") return LadderFamily::custom;
  throw ConfigError("unknown ladder family '" + std::string(name) + "'");
}

std::string_view to_string(LadderFamily family) {
  switch (family) {
    case LadderFamily::singular: return "singular";
    case LadderFamily::histogram: return "histogram";
    case LadderFamily::custom: return "custom";
  }
  return "unknown";
}

struct SubspaceLadder::Impl {
  LadderFamily family;
  std::vector<std::size_t> dims;
  Matrix basis;
  Matrix Q;
  Matrix R;
  // First level whose basis is rank deficient; levels() if none.
  std::size_t first_bad_level;
};

SubspaceLadder::SubspaceLadder(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

SubspaceLadder SubspaceLadder::from_basis(Matrix basis, std::vector<std::size_t> dims,
                                          LadderFamily family) {
  if (dims.empty()) throw DomainError("ladder needs at least one level");
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (dims[k] == 0) throw DomainError("ladder dimensions must be positive");
    if (k > 0 && dims[k] <= dims[k - 1])
      throw DomainError("ladder dimensions must be strictly increasing");
  }
  const std::size_t n = static_cast<std::size_t>(basis.rows());
  if (dims.back() > n)
    throw DomainError("largest ladder dimension " + std::to_string(dims.back()) +
                      " exceeds n = " + std::to_string(n));
  if (dims.back() > static_cast<std::size_t>(basis.cols()))
    throw DimensionError("ladder basis has " + std::to_string(basis.cols()) +
                         " columns, fewer than the largest dimension");
  if (!basis.allFinite()) throw DomainError("ladder basis has non-finite entries");

  auto impl = std::make_shared<Impl>();
  impl->family = family;
  impl->dims = std::move(dims);
  const auto dmax = static_cast<Eigen::Index>(impl->dims.back());
  impl->basis = basis.leftCols(dmax);
  ThinQr qr = thin_qr(impl->basis);
  const double sqn = std::sqrt(static_cast<double>(n));
  impl->Q = qr.Q * sqn;
  impl->R = qr.R / sqn;

  impl->first_bad_level = impl->dims.size();
  for (std::size_t lvl = 0; lvl < impl->dims.size(); ++lvl) {
    const auto diag = impl->R.diagonal().head(static_cast<Eigen::Index>(impl->dims[lvl])).cwiseAbs();
    if (!(diag.minCoeff() > 1e-10 * diag.maxCoeff())) {
      impl->first_bad_level = lvl;
      break;
    }
  }
  return SubspaceLadder(std::move(impl));
}

SubspaceLadder SubspaceLadder::singular(const LinearizationMatrix& T,
                                        std::vector<std::size_t> dims) {
  if (dims.empty()) throw DomainError("ladder needs at least one level");
  const Svd& svd = T.svd();
  const std::size_t avail = static_cast<std::size_t>(svd.U.cols());
  if (dims.back() > avail)
    throw DomainError("singular ladder dimension " + std::to_string(dims.back()) +
                      " exceeds the number of singular directions " + std::to_string(avail));
  Matrix basis = svd.U.leftCols(static_cast<Eigen::Index>(dims.back())) *
                 std::sqrt(static_cast<double>(T.n()));
  return from_basis(std::move(basis), std::move(dims), LadderFamily::singular);
}

SubspaceLadder SubspaceLadder::histogram(const DesignGrid& grid, unsigned depth) {
  if (depth > 30) throw DomainError("histogram depth too large");
  const std::size_t bins = std::size_t{1} << depth;
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double lo = grid[0];
  const double hi = grid[grid.size() - 1];
  const double span = hi - lo;
  // Position in [0, 1] of each design point.
  std::vector<double> pos(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    pos[static_cast<std::size_t>(i)] = span > 0 ? (grid[static_cast<std::size_t>(i)] - lo) / span : 0.0;
  auto bin_of = [&](std::size_t i, std::size_t nb) {
    const auto b = static_cast<std::size_t>(std::floor(pos[i] * static_cast<double>(nb)));
    return std::min(b, nb - 1);
  };
  Matrix basis = Matrix::Zero(n, static_cast<Eigen::Index>(bins));
  basis.col(0).setOnes();
  Eigen::Index col = 1;
  for (unsigned scale = 0; scale < depth; ++scale) {
    const std::size_t parents = std::size_t{1} << scale;
    for (std::size_t l = 0; l < parents; ++l, ++col) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t b = bin_of(static_cast<std::size_t>(i), 2 * parents);
        if (b == 2 * l) basis(i, col) = 1.0;
        else if (b == 2 * l + 1) basis(i, col) = -1.0;
      }
    }
  }
  std::vector<std::size_t> dims;
  for (unsigned k = 0; k <= depth; ++k) dims.push_back(std::size_t{1} << k);
  return from_basis(std::move(basis), std::move(dims), LadderFamily::histogram);
}

LadderFamily SubspaceLadder::family() const { return impl_->family; }
std::size_t SubspaceLadder::levels() const { return impl_->dims.size(); }
const std::vector<std::size_t>& SubspaceLadder::dims() const { return impl_->dims; }
std::size_t SubspaceLadder::max_dim() const { return impl_->dims.back(); }
std::size_t SubspaceLadder::n() const { return static_cast<std::size_t>(impl_->basis.rows()); }
const Matrix& SubspaceLadder::basis() const { return impl_->basis; }
const Matrix& SubspaceLadder::Q() const { return impl_->Q; }
const Matrix& SubspaceLadder::R() const { return impl_->R; }

std::size_t SubspaceLadder::dim(std::size_t level) const {
  if (level >= levels())
    throw DomainError("ladder level " + std::to_string(level) + " out of range (levels=" +
                      std::to_string(levels()) + ")");
  return impl_->dims[level];
}

Matrix SubspaceLadder::gram(std::size_t level) const {
  return impl_->basis.leftCols(static_cast<Eigen::Index>(dim(level)));
}

void SubspaceLadder::check_level(std::size_t level) const {
  dim(level);
  if (level >= impl_->first_bad_level)
    throw ConditioningError("ladder level " + std::to_string(level) + " (d=" +
                            std::to_string(impl_->dims[level]) +
                            "): empirical Gram matrix is numerically singular");
}

Vector SubspaceLadder::orthonormal_coefficients(std::size_t level, const Vector& y) const {
  check_level(level);
  if (static_cast<std::size_t>(y.size()) != n())
    throw DimensionError("projection: vector length " + std::to_string(y.size()) +
                         " does not match n = " + std::to_string(n()));
  const auto d = static_cast<Eigen::Index>(dim(level));
  return impl_->Q.leftCols(d).transpose() * y / static_cast<double>(n());
}

Projection empirical_project(const Vector& y, const SubspaceLadder& ladder, std::size_t level,
                             const DesignGrid& grid) {
  if (grid.size() != ladder.n())
    throw DimensionError("empirical_project: grid size does not match the ladder");
  const Vector a = ladder.orthonormal_coefficients(level, y);
  const auto d = a.size();
  Projection out;
  out.coefficients =
      ladder.R().topLeftCorner(d, d).triangularView<Eigen::Upper>().solve(a);
  out.projected = ladder.Q().leftCols(d) * a;
  return out;
}

Matrix level_system(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                    std::size_t level) {
  ladder.check_level(level);
  if (T.n() != ladder.n()) throw DimensionError("operator and ladder use different n");
  const auto d = static_cast<Eigen::Index>(ladder.dim(level));
  return ladder.Q().leftCols(d).transpose() * T.entries() / static_cast<double>(T.n());
}

namespace {
double smallest_singular(const Matrix& M) {
  if (M.rows() > M.cols()) return 0.0;
  Eigen::BDCSVD<Matrix> svd(M);
  return svd.singularValues()[svd.singularValues().size() - 1];
}
}  // namespace

double gamma_m(const LinearizationMatrix& T, const SubspaceLadder& ladder, std::size_t level,
               const DesignGrid& grid) {
  if (grid.size() != ladder.n()) throw DimensionError("gamma_m: grid size mismatch");
  return smallest_singular(level_system(T, ladder, level));
}

double gamma_upper(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                   std::size_t level, const DesignGrid& grid) {
  if (grid.size() != ladder.n()) throw DimensionError("gamma_upper: grid size mismatch");
  const Matrix M = level_system(T, ladder, level);
  Matrix rest = T.gram();
  rest.noalias() -= M.transpose() * M;
  return std::sqrt(std::max(0.0, max_eigenvalue(rest)));
}

ModelSystem build_model_system(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                               std::size_t level) {
  ModelSystem s;
  s.level = level;
  s.dim = ladder.dim(level);
  s.M = level_system(T, ladder, level);
  s.pinv = pseudoinverse(s.M);
  return s;
}

std::vector<ModelSystem> build_model_systems(const LinearizationMatrix& T,
                                             const SubspaceLadder& ladder) {
  std::vector<ModelSystem> out;
  out.reserve(ladder.levels());
  if (ladder.levels() == 0) return out;
  // Levels share Q, so one product serves them all.
  const Matrix full = level_system(T, ladder, ladder.levels() - 1);
  for (std::size_t m = 0; m < ladder.levels(); ++m) {
    ladder.check_level(m);
    ModelSystem s;
    s.level = m;
    s.dim = ladder.dim(m);
    s.M = full.topRows(static_cast<Eigen::Index>(s.dim));
    s.pinv = pseudoinverse(s.M);
    out.push_back(std::move(s));
  }
  return out;
}

ModelProjector build_model_projector(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                                     std::size_t level, const DesignGrid& grid,
                                     int materialize_obs) {
  if (grid.size() != ladder.n()) throw DimensionError("build_model_projector: grid size mismatch");
  ModelProjector p;
  p.system = build_model_system(T, ladder, level);
  p.level = level;
  p.dim = p.system.dim;
  p.sol_projector = p.system.pinv * p.system.M;
  p.gamma_m = smallest_singular(p.system.M);
  Matrix rest = T.gram();
  rest.noalias() -= p.system.M.transpose() * p.system.M;
  p.gamma_upper = std::sqrt(std::max(0.0, max_eigenvalue(rest)));
  const bool dense = materialize_obs < 0 ? grid.size() <= kDenseObsProjectorLimit
                                         : materialize_obs > 0;
  if (dense) {
    const auto Qm = ladder.Q().leftCols(static_cast<Eigen::Index>(p.dim));
    p.obs_projector = Qm * Qm.transpose() / static_cast<double>(grid.size());
  }
  return p;
}

AsDiagnostic as_diagnostic(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                           const DesignGrid& grid) {
  AsDiagnostic out;
  out.dims = ladder.dims();
  if (grid.size() != ladder.n()) throw DimensionError("as_diagnostic: grid size mismatch");
  const Matrix full =
      ladder.levels() ? level_system(T, ladder, ladder.levels() - 1) : Matrix();
  for (std::size_t m = 0; m < ladder.levels(); ++m) {
    ladder.check_level(m);
    const Matrix M = full.topRows(static_cast<Eigen::Index>(ladder.dim(m)));
    out.gamma.push_back(smallest_singular(M));
    Matrix rest = T.gram();
    rest.noalias() -= M.transpose() * M;
    out.gamma_upper.push_back(std::sqrt(std::max(0.0, max_eigenvalue(rest))));
  }
  out.band_low = std::numeric_limits<double>::infinity();
  out.band_high = 0.0;
  for (std::size_t m = 0; m + 1 < ladder.levels(); ++m) {
    const double r = out.gamma[m + 1] > 0.0 ? out.gamma_upper[m] / out.gamma[m + 1]
                                            : std::numeric_limits<double>::infinity();
    out.ratio.push_back(r);
    out.band_low = std::min(out.band_low, r);
    out.band_high = std::max(out.band_high, r);
  }
  if (out.ratio.empty()) out.band_low = out.band_high = 0.0;
  return out;
}

}  // namespace ipest
