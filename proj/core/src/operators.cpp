#include "ipest/operators.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "ipest/errors.hpp"

namespace ipest {

OperatorKind parse_operator_kind(std::string_view name) {
  if (name == "diagonal") return OperatorKind::diagonal;
  if (name == "volterra" || name == "volterra-integration") return OperatorKind::volterra;
  if (name == "hammerstein") return OperatorKind::hammerstein;
  throw ConfigError("unknown operator kind '" + std::string(name) + "'");
}

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::diagonal: return "diagonal";
    case OperatorKind::volterra: return "volterra";
    case OperatorKind::hammerstein: return "hammerstein";
  }
  return "unknown";
}

LinkKind parse_link_kind(std::string_view name) {
  if (name == "affine") return LinkKind::affine;
  if (name == "quadratic-clipped" || name == "quadratic_clipped") return LinkKind::quadratic_clipped;
  if (name == "sine") return LinkKind::sine;
  throw ConfigError("unknown link function '" + std::string(name) + "'");
}

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::affine: return "affine";
    case LinkKind::quadratic_clipped: return "quadratic-clipped";
    case LinkKind::sine: return "sine";
  }
  return "unknown";
}

LinkFunction LinkFunction::affine(double a, double c) {
  LinkFunction f;
  f.kind = LinkKind::affine;
  f.a = a;
  f.c = c;
  return f;
}

LinkFunction LinkFunction::quadratic_clipped(double a, double b, double K) {
  if (!(K > 0.0)) throw DomainError("quadratic-clipped link needs K > 0");
  LinkFunction f;
  f.kind = LinkKind::quadratic_clipped;
  f.a = a;
  f.b = b;
  f.K = K;
  return f;
}

LinkFunction LinkFunction::sine(double a) {
  LinkFunction f;
  f.kind = LinkKind::sine;
  f.a = a;
  return f;
}

double LinkFunction::value(double u) const {
  switch (kind) {
    case LinkKind::affine: return a * u + c;
    case LinkKind::quadratic_clipped: {
      const double au = std::abs(u);
      const double q = au <= K ? u * u : K * K + 2.0 * K * (au - K);
      return a * u + b * q;
    }
    case LinkKind::sine: return u + a * std::sin(u);
  }
  return 0.0;
}

double LinkFunction::derivative(double u) const {
  switch (kind) {
    case LinkKind::affine: return a;
    case LinkKind::quadratic_clipped: {
      const double dq = std::abs(u) <= K ? 2.0 * u : 2.0 * K * (u > 0 ? 1.0 : -1.0);
      return a + b * dq;
    }
    case LinkKind::sine: return 1.0 + a * std::cos(u);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

struct LinearizationMatrix::Impl {
  Matrix T;
  double p;
  std::once_flag svd_once;
  Svd svd;
  std::once_flag gram_once;
  Matrix gram;
};

LinearizationMatrix::LinearizationMatrix(Matrix entries, double p)
    : impl_(std::make_shared<Impl>()) {
  if (!(p > 0.0)) throw DomainError("ill-posedness degree p must be positive");
  if (!entries.allFinite()) throw DomainError("linearization has non-finite entries");
  impl_->T = std::move(entries);
  impl_->p = p;
}

const Matrix& LinearizationMatrix::entries() const { return impl_->T; }
double LinearizationMatrix::p() const { return impl_->p; }
std::size_t LinearizationMatrix::n() const { return static_cast<std::size_t>(impl_->T.rows()); }
std::size_t LinearizationMatrix::dim() const { return static_cast<std::size_t>(impl_->T.cols()); }

const Svd& LinearizationMatrix::svd() const {
  std::call_once(impl_->svd_once, [this] {
    const double scale = 1.0 / std::sqrt(static_cast<double>(impl_->T.rows()));
    impl_->svd = thin_svd(impl_->T * scale);
  });
  return impl_->svd;
}

const Matrix& LinearizationMatrix::gram() const {
  std::call_once(impl_->gram_once, [this] {
    const Matrix& T = impl_->T;
    impl_->gram = Matrix::Zero(T.cols(), T.cols());
    impl_->gram.selfadjointView<Eigen::Lower>().rankUpdate(T.transpose(),
                                                           1.0 / static_cast<double>(T.rows()));
    impl_->gram = impl_->gram.selfadjointView<Eigen::Lower>();
  });
  return impl_->gram;
}

// ---------------------------------------------------------------------------

Vector quadrature_weights(const DesignGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Vector dt(n);
  double prev = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    dt[i] = grid[static_cast<std::size_t>(i)] - prev;
    prev = grid[static_cast<std::size_t>(i)];
  }
  return dt;
}

Matrix cosine_basis(const DesignGrid& grid, std::size_t D) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Matrix B(n, static_cast<Eigen::Index>(D));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = grid[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < B.cols(); ++k)
      B(i, k) = k == 0 ? 1.0 : std::numbers::sqrt2 * std::cos(std::numbers::pi * k * t);
  }
  return B;
}

Matrix empirical_cosine_system(const DesignGrid& grid, std::size_t D) {
  if (D > grid.size())
    throw DimensionError("empirically orthonormal system needs D <= n (D=" + std::to_string(D) +
                         ", n=" + std::to_string(grid.size()) + ")");
  Matrix C(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(D));
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    const double t = grid[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < C.cols(); ++k) C(i, k) = std::cos(std::numbers::pi * k * t);
  }
  ThinQr qr = thin_qr(C);
  for (Eigen::Index k = 0; k < qr.R.cols(); ++k) {
    if (std::abs(qr.R(k, k)) <= 1e-10 * std::abs(qr.R(0, 0)))
      throw ConditioningError("cosine system is rank deficient on this grid at column " +
                              std::to_string(k + 1));
  }
  return qr.Q * std::sqrt(static_cast<double>(grid.size()));
}

namespace {
// Row-wise cumulative sum of dt .* A.
Matrix cumulative_quadrature(const Vector& dt, const Matrix& A) {
  Matrix out(A.rows(), A.cols());
  if (A.rows() == 0) return out;
  out.row(0) = dt[0] * A.row(0);
  for (Eigen::Index i = 1; i < A.rows(); ++i) out.row(i) = out.row(i - 1) + dt[i] * A.row(i);
  return out;
}
}  // namespace

struct ForwardOperator::Impl {
  OperatorKind kind;
  DesignGrid grid;
  double p;
  double c_T;
  double rho;
  Vector x_star;
  LinkFunction link;
  Vector b;
  Matrix basis;  // Psi or cosine system
  Vector dt;
  LinearizationMatrix lin;

  Impl(OperatorKind k, DesignGrid g, double p_, LinearizationMatrix l)
      : kind(k), grid(std::move(g)), p(p_), c_T(0.0), rho(0.0), lin(std::move(l)) {}
};

ForwardOperator::ForwardOperator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

namespace {
Vector resolve_x_star(const ForwardOperator::Options& o, std::size_t D) {
  if (o.x_star.size() == 0) return Vector::Zero(static_cast<Eigen::Index>(D));
  if (static_cast<std::size_t>(o.x_star.size()) != D)
    throw DimensionError("x_star has dimension " + std::to_string(o.x_star.size()) +
                         " but the operator has D=" + std::to_string(D));
  if (!o.x_star.allFinite()) throw DomainError("x_star has non-finite entries");
  return o.x_star;
}

void check_radius(const ForwardOperator::Options& o) {
  if (!(o.rho > 0.0)) throw DomainError("trust radius rho must be positive");
  if (!(o.c_T >= 0.0 && o.c_T < 1.0)) throw DomainError("c_T must lie in [0, 1)");
}
}  // namespace

ForwardOperator ForwardOperator::diagonal(const DesignGrid& grid, const Vector& b, double p,
                                          const Options& options) {
  check_radius(options);
  if (b.size() == 0) throw DimensionError("diagonal operator needs at least one value");
  if (!b.allFinite()) throw DomainError("diagonal values must be finite");
  const auto D = static_cast<std::size_t>(b.size());
  Matrix Psi = empirical_cosine_system(grid, D);
  Matrix T = Psi * b.asDiagonal();
  auto impl = std::make_shared<Impl>(OperatorKind::diagonal, grid, p,
                                     LinearizationMatrix(std::move(T), p));
  impl->b = b;
  impl->basis = std::move(Psi);
  impl->x_star = resolve_x_star(options, D);
  impl->rho = options.rho;
  if (options.c_T != 0.0) throw DomainError("linear operators have c_T = 0");
  return ForwardOperator(std::move(impl));
}

ForwardOperator ForwardOperator::diagonal_power(const DesignGrid& grid, std::size_t D, double p,
                                                const Options& options) {
  Vector b(static_cast<Eigen::Index>(D));
  for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = std::pow(static_cast<double>(j + 1), -p);
  return diagonal(grid, b, p, options);
}

ForwardOperator ForwardOperator::volterra(const DesignGrid& grid, std::size_t D, double p,
                                          const Options& options) {
  check_radius(options);
  if (D == 0) throw DimensionError("volterra operator needs D >= 1");
  if (grid[0] <= 0.0 || grid[grid.size() - 1] > 1.0)
    throw DomainError("volterra/hammerstein grids must lie in (0, 1]");
  if (options.c_T != 0.0) throw DomainError("linear operators have c_T = 0");
  Matrix B = cosine_basis(grid, D);
  Vector dt = quadrature_weights(grid);
  Matrix T = cumulative_quadrature(dt, B);
  auto impl = std::make_shared<Impl>(OperatorKind::volterra, grid, p,
                                     LinearizationMatrix(std::move(T), p));
  impl->basis = std::move(B);
  impl->dt = std::move(dt);
  impl->x_star = resolve_x_star(options, D);
  impl->rho = options.rho;
  return ForwardOperator(std::move(impl));
}

ForwardOperator ForwardOperator::hammerstein(const DesignGrid& grid, std::size_t D,
                                             const LinkFunction& phi, double p,
                                             const Options& options) {
  check_radius(options);
  if (D == 0) throw DimensionError("hammerstein operator needs D >= 1");
  if (grid[0] <= 0.0 || grid[grid.size() - 1] > 1.0)
    throw DomainError("volterra/hammerstein grids must lie in (0, 1]");
  Matrix B = cosine_basis(grid, D);
  Vector dt = quadrature_weights(grid);
  Vector xs = resolve_x_star(options, D);
  Vector u = B * xs;
  Vector w(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) w[i] = dt[i] * phi.derivative(u[i]);
  Matrix T(B.rows(), B.cols());
  if (B.rows() > 0) {
    T.row(0) = w[0] * B.row(0);
    for (Eigen::Index i = 1; i < B.rows(); ++i) T.row(i) = T.row(i - 1) + w[i] * B.row(i);
  }
  auto impl = std::make_shared<Impl>(OperatorKind::hammerstein, grid, p,
                                     LinearizationMatrix(std::move(T), p));
  impl->basis = std::move(B);
  impl->dt = std::move(dt);
  impl->x_star = std::move(xs);
  impl->rho = options.rho;
  impl->c_T = options.c_T;
  impl->link = phi;
  return ForwardOperator(std::move(impl));
}

ForwardOperator ForwardOperator::with_options(const Options& options) const {
  switch (impl_->kind) {
    case OperatorKind::diagonal: {
      check_radius(options);
      if (options.c_T != 0.0) throw DomainError("linear operators have c_T = 0");
      auto impl = std::make_shared<Impl>(*impl_);
      impl->x_star = resolve_x_star(options, dim());
      impl->rho = options.rho;
      return ForwardOperator(std::move(impl));
    }
    case OperatorKind::volterra: {
      check_radius(options);
      if (options.c_T != 0.0) throw DomainError("linear operators have c_T = 0");
      auto impl = std::make_shared<Impl>(*impl_);
      impl->x_star = resolve_x_star(options, dim());
      impl->rho = options.rho;
      return ForwardOperator(std::move(impl));
    }
    case OperatorKind::hammerstein:
      return hammerstein(impl_->grid, dim(), impl_->link, impl_->p, options);
  }
  throw Error("unreachable operator kind");
}

OperatorKind ForwardOperator::kind() const { return impl_->kind; }
bool ForwardOperator::is_linear() const { return impl_->kind != OperatorKind::hammerstein; }
std::size_t ForwardOperator::dim() const { return impl_->lin.dim(); }
std::size_t ForwardOperator::n() const { return impl_->grid.size(); }
const DesignGrid& ForwardOperator::grid() const { return impl_->grid; }
const LinearizationMatrix& ForwardOperator::linearization() const { return impl_->lin; }
double ForwardOperator::p() const { return impl_->p; }
double ForwardOperator::c_T() const { return impl_->c_T; }
double ForwardOperator::rho() const { return impl_->rho; }
const Vector& ForwardOperator::x_star() const { return impl_->x_star; }
const LinkFunction& ForwardOperator::link() const { return impl_->link; }
const Matrix& ForwardOperator::synthesis() const { return impl_->basis; }

const Vector& ForwardOperator::diagonal_values() const {
  if (impl_->kind != OperatorKind::diagonal)
    throw DomainError("diagonal_values is only defined for the diagonal operator");
  return impl_->b;
}

bool ForwardOperator::in_trust_ball(const Vector& x) const {
  if (!std::isfinite(impl_->rho)) return true;
  return (x - impl_->x_star).norm() <= impl_->rho * (1.0 + 1e-12);
}

Vector ForwardOperator::evaluate(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim())
    throw DimensionError("evaluate: x has dimension " + std::to_string(x.size()) +
                         ", operator expects D=" + std::to_string(dim()));
  if (impl_->kind != OperatorKind::hammerstein) return T() * x;
  if (!in_trust_ball(x))
    throw DomainError("evaluate: ||x - x_star|| = " + std::to_string((x - impl_->x_star).norm()) +
                      " exceeds the trust radius " + std::to_string(impl_->rho));
  return evaluate_values(impl_->basis * x);
}

Vector ForwardOperator::evaluate(const Vector& x, const DesignGrid& grid) const {
  if (!(grid == impl_->grid))
    throw DimensionError("evaluate: grid differs from the operator's design grid");
  return evaluate(x);
}

Vector ForwardOperator::evaluate_values(const Vector& u) const {
  if (impl_->kind == OperatorKind::diagonal)
    throw DomainError("evaluate_values needs an integral operator");
  if (static_cast<std::size_t>(u.size()) != n())
    throw DimensionError("evaluate_values: expected " + std::to_string(n()) + " grid values");
  Vector out(u.size());
  double acc = 0.0;
  const bool ham = impl_->kind == OperatorKind::hammerstein;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    acc += impl_->dt[i] * (ham ? impl_->link.value(u[i]) : u[i]);
    out[i] = acc;
  }
  return out;
}

Vector ForwardOperator::jacobian_transpose_apply(const Vector& x, const Vector& w) const {
  if (static_cast<std::size_t>(x.size()) != dim() || static_cast<std::size_t>(w.size()) != n())
    throw DimensionError("jacobian_transpose_apply: bad dimensions");
  if (impl_->kind != OperatorKind::hammerstein) return T().transpose() * w;
  // d/dx sum_{j<=i} phi(u_j) dt_j, u = B x; the adjoint of the running sum is a
  // reversed running sum.
  const Vector u = impl_->basis * x;
  Vector g(u.size());
  double acc = 0.0;
  for (Eigen::Index i = u.size() - 1; i >= 0; --i) {
    acc += w[i];
    g[i] = acc * impl_->dt[i] * impl_->link.derivative(u[i]);
  }
  return impl_->basis.transpose() * g;
}

Vector ForwardOperator::observation_coefficients(const Vector& x) const {
  if (impl_->kind != OperatorKind::diagonal)
    throw DomainError("observation_coefficients is only defined for the diagonal operator");
  if (x.size() != impl_->b.size()) throw DimensionError("observation_coefficients: bad dimension");
  return impl_->b.cwiseProduct(x);
}

Vector fractional_power_apply(const LinearizationMatrix& T, double nu, const Vector& w) {
  if (!(nu > 0.0 && nu <= 0.5)) throw DomainError("fractional power needs 0 < nu <= 1/2");
  if (static_cast<std::size_t>(w.size()) != T.dim())
    throw DimensionError("fractional_power_apply: w has the wrong dimension");
  const Svd& svd = T.svd();
  Vector coeff = svd.V.transpose() * w;
  for (Eigen::Index j = 0; j < coeff.size(); ++j)
    coeff[j] *= svd.s[j] > 0.0 ? std::pow(svd.s[j], 2.0 * nu) : 0.0;
  return svd.V * coeff;
}

double rate_exponent(double nu, double p) {
  if (!(nu >= 0.0 && nu <= 0.5)) throw DomainError("rate_exponent needs nu in (0, 1/2]");
  if (!(p > 0.0)) throw DomainError("rate_exponent needs p > 0");
  return 2.0 * nu * p / (4.0 * nu * p + 2.0 * p + 1.0);
}

}  // namespace ipest
