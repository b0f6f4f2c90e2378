#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "ipest/operators.hpp"

namespace ipest {

enum class LadderFamily { singular, histogram, custom };

LadderFamily parse_ladder_family(std::string_view name);
std::string_view to_string(LadderFamily family);

/// Nested spaces Y_1 c Y_2 c ... c Y_M where Y_m is spanned by the first d_m
/// columns of a basis evaluated on the grid. Levels are 0-based.
///
/// The basis is orthonormalized once for the empirical inner product by
/// Householder QR, G = Q R with (1/n) Q^t Q = I. Since Q's leading columns
/// span the leading basis columns, every level shares the same Q.
class SubspaceLadder {
 public:
  /// Y_m = span of the leading d_m left singular vectors of T (empirical metric).
  static SubspaceLadder singular(const LinearizationMatrix& T, std::vector<std::size_t> dims);
  /// Haar system on [t_1, t_n] with dims 1, 2, 4, ..., 2^depth; level k spans
  /// the indicators of 2^k equal bins.
  static SubspaceLadder histogram(const DesignGrid& grid, unsigned depth);
  static SubspaceLadder from_basis(Matrix basis, std::vector<std::size_t> dims,
                                   LadderFamily family = LadderFamily::custom);

  LadderFamily family() const;
  std::size_t levels() const;
  std::size_t dim(std::size_t level) const;
  const std::vector<std::size_t>& dims() const;
  std::size_t max_dim() const;
  std::size_t n() const;

  /// Basis columns on the grid (n x d_M).
  const Matrix& basis() const;
  /// G_m, the first d_m basis columns.
  Matrix gram(std::size_t level) const;
  /// Empirically orthonormal columns (n x d_M) and the triangular factor.
  const Matrix& Q() const;
  const Matrix& R() const;

  /// Throws ConditioningError if the level's basis is numerically rank
  /// deficient (|R_kk| <= 1e-10 max |R_ii|), or DomainError for a bad index.
  void check_level(std::size_t level) const;
  /// Coordinates Q_m^t y / n in the orthonormal system.
  Vector orthonormal_coefficients(std::size_t level, const Vector& y) const;

 private:
  struct Impl;
  explicit SubspaceLadder(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

struct Projection {
  Vector coefficients;  // in the original basis G_m
  Vector projected;     // Pi_{Y_m} y on the grid
};

/// Least-squares projection onto Y_m in the empirical norm.
Projection empirical_project(const Vector& y, const SubspaceLadder& ladder, std::size_t level,
                             const DesignGrid& grid);

/// M_m = Q_m^t T / n (d_m x D): T* restricted to Y_m in orthonormal coordinates.
Matrix level_system(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                    std::size_t level);

/// inf over unit v in Y_m of ||T* v||.
double gamma_m(const LinearizationMatrix& T, const SubspaceLadder& ladder, std::size_t level,
               const DesignGrid& grid);
/// ||T* (I - Pi_{Y_m})||.
double gamma_upper(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                   std::size_t level, const DesignGrid& grid);

/// Light per-level data used in estimator sweeps.
struct ModelSystem {
  std::size_t level = 0;
  std::size_t dim = 0;
  Matrix M;     // d_m x D
  Matrix pinv;  // D x d_m
};

std::vector<ModelSystem> build_model_systems(const LinearizationMatrix& T,
                                             const SubspaceLadder& ladder);
ModelSystem build_model_system(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                               std::size_t level);

/// Dense projector data for one level. The observation projector is an n x n
/// matrix and is only materialized when requested.
struct ModelProjector {
  std::size_t level = 0;
  std::size_t dim = 0;
  Matrix obs_projector;  // empty unless materialized
  Matrix sol_projector;  // D x D, Pi_{X_m} = M^+ M
  double gamma_m = 0.0;
  double gamma_upper = 0.0;
  ModelSystem system;
};

inline constexpr std::size_t kDenseObsProjectorLimit = 2048;

/// Materializes obs_projector when n <= kDenseObsProjectorLimit unless
/// `materialize_obs` says otherwise.
ModelProjector build_model_projector(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                                     std::size_t level, const DesignGrid& grid,
                                     int materialize_obs = -1);

/// Per-level gamma_m, gamma_upper and the ratios gamma_upper(m) / gamma_m(m+1).
struct AsDiagnostic {
  std::vector<std::size_t> dims;
  std::vector<double> gamma;
  std::vector<double> gamma_upper;
  std::vector<double> ratio;  // length levels-1
  double band_low = 0.0;
  double band_high = 0.0;
};

AsDiagnostic as_diagnostic(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                           const DesignGrid& grid);

}  // namespace ipest
