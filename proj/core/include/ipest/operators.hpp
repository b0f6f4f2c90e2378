#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <string_view>

#include "ipest/design.hpp"
#include "ipest/linalg.hpp"

namespace ipest {

enum class OperatorKind { diagonal, volterra, hammerstein };

OperatorKind parse_operator_kind(std::string_view name);
std::string_view to_string(OperatorKind kind);

enum class LinkKind { affine, quadratic_clipped, sine };

/// Scalar link phi of the Hammerstein operator, with its analytic derivative.
///   affine:            phi(u) = a u + c
///   quadratic_clipped: phi(u) = a u + b q(u), q(u) = u^2 on |u| <= K and
///                      continued linearly (C^1) outside
///   sine:              phi(u) = u + a sin(u)
struct LinkFunction {
  LinkKind kind = LinkKind::affine;
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double K = 1.0;

  static LinkFunction affine(double a, double c = 0.0);
  static LinkFunction quadratic_clipped(double a, double b, double K);
  static LinkFunction sine(double a);

  double value(double u) const;
  double derivative(double u) const;
};

LinkKind parse_link_kind(std::string_view name);
std::string_view to_string(LinkKind kind);

/// Matrix of T (n observations x D coefficients) with its ill-posedness
/// degree p. Shares storage on copy. The SVD of T/sqrt(n), i.e. the singular
/// system for the empirical observation metric, is computed once on demand.
class LinearizationMatrix {
 public:
  LinearizationMatrix(Matrix entries, double p);

  const Matrix& entries() const;
  double p() const;
  std::size_t n() const;
  std::size_t dim() const;

  /// Thin SVD of T/sqrt(n). Thread-safe lazy evaluation.
  const Svd& svd() const;
  /// T^t T / n, the Gram matrix of T* T.
  const Matrix& gram() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Forward map F together with its fixed linearization T, the trust radius rho,
/// the bound c_T and the initial guess x_star. Immutable; copies share state.
///
/// Coefficient conventions:
///   diagonal: F(x) = Psi diag(b) x, where Psi (n x D) is an empirically
///             orthonormal cosine system; requires D <= n.
///   volterra / hammerstein: x holds coefficients in the L2[0,1]-orthonormal
///             cosine basis chi_1 = 1, chi_k = sqrt(2) cos(pi (k-1) s); the
///             integral is a left-rectangle sum over t_j <= t_i with
///             dt_j = t_j - t_{j-1}, t_0 = 0.
struct OperatorOptions {
  Vector x_star;  // empty means zero
  double rho = std::numeric_limits<double>::infinity();
  double c_T = 0.0;
};

class ForwardOperator {
 public:
  using Options = OperatorOptions;

  static ForwardOperator diagonal(const DesignGrid& grid, const Vector& b, double p,
                                  const Options& options = {});
  /// b_j = j^{-p}, j = 1..D.
  static ForwardOperator diagonal_power(const DesignGrid& grid, std::size_t D, double p,
                                        const Options& options = {});
  static ForwardOperator volterra(const DesignGrid& grid, std::size_t D, double p = 1.0,
                                  const Options& options = {});
  /// T = F'(x_star).
  static ForwardOperator hammerstein(const DesignGrid& grid, std::size_t D,
                                     const LinkFunction& phi, double p,
                                     const Options& options);

  OperatorKind kind() const;
  bool is_linear() const;
  std::size_t dim() const;
  std::size_t n() const;
  const DesignGrid& grid() const;
  const LinearizationMatrix& linearization() const;
  const Matrix& T() const { return linearization().entries(); }
  double p() const;
  double c_T() const;
  double rho() const;
  const Vector& x_star() const;
  const LinkFunction& link() const;
  /// Diagonal kind only: b_1..b_D.
  const Vector& diagonal_values() const;

  /// Basis matrix evaluated on the grid: Psi (diagonal) or the cosine system B.
  const Matrix& synthesis() const;

  /// (F(x)(t_i))_i. Nonlinear kinds require ||x - x_star|| <= rho.
  Vector evaluate(const Vector& x) const;
  /// Same, after checking that `grid` is the operator's grid.
  Vector evaluate(const Vector& x, const DesignGrid& grid) const;
  /// Hammerstein/volterra on grid values u_j = x(t_j) directly:
  /// sum_{j <= i} phi(u_j) dt_j (phi = identity for volterra).
  Vector evaluate_values(const Vector& u) const;
  /// F'(x)^t w for w on the grid (no 1/n factor). Equals T^t w for linear kinds.
  Vector jacobian_transpose_apply(const Vector& x, const Vector& w) const;
  /// Diagonal kind: coefficients of F(x) in Psi, i.e. b .* x.
  Vector observation_coefficients(const Vector& x) const;

  /// Same operator with a different anchor / trust radius (T unchanged for
  /// linear kinds, recomputed at the new x_star for hammerstein).
  ForwardOperator with_options(const Options& options) const;

  bool in_trust_ball(const Vector& x) const;

 private:
  struct Impl;
  explicit ForwardOperator(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

/// L2[0,1]-orthonormal cosine system on the grid (n x D).
Matrix cosine_basis(const DesignGrid& grid, std::size_t D);

/// Empirically orthonormal system: (1/n) Psi^t Psi = I (n x D, D <= n).
Matrix empirical_cosine_system(const DesignGrid& grid, std::size_t D);

/// dt_j = t_j - t_{j-1}, t_0 = 0.
Vector quadrature_weights(const DesignGrid& grid);

/// (T*T)^nu w with singular pairs of T in the empirical metric.
Vector fractional_power_apply(const LinearizationMatrix& T, double nu, const Vector& w);

/// 2 nu p / (4 nu p + 2 p + 1).
double rate_exponent(double nu, double p);

}  // namespace ipest
