#pragma once

#include <cstddef>
#include <vector>

#include "ipest/operators.hpp"
#include "ipest/ordered.hpp"
#include "ipest/report.hpp"
#include "ipest/solver.hpp"
#include "ipest/subspaces.hpp"

namespace ipest {

/// alpha_k = alpha_0 q^k, k = 0..K-1, with weights L_k = k c_L / K + 1.
struct AlphaGrid {
  double alpha0 = 1.0;
  double q = 0.5;
  std::size_t K = 25;
  double c_L = 1.0;

  void validate() const;
  double value(std::size_t k) const;
  double weight(std::size_t k) const;
  std::vector<double> values() const;
};

/// Singular system of Pi_{Y_{m0}} T shared by every alpha on the grid.
struct TikhonovContext {
  ForwardOperator op;
  SubspaceLadder ladder;
  std::size_t m0 = 0;
  ModelSystem system;  // M = Q_{m0}^t T / n
  Matrix U;            // d x r
  Vector s;            // r singular values of M
  Matrix V;            // D x r
};

TikhonovContext make_tikhonov_context(const ForwardOperator& op, const SubspaceLadder& ladder,
                                      std::size_t m0);

/// R_alpha = (T^t Pi T + alpha I)^{-1} T^t Pi, written V diag(f) U^t Q^t / n
/// with filter f_j = s_j / (s_j^2 + alpha).
struct RegularizedOperator {
  double alpha = 0.0;
  Vector filter;
  double trace_rr = 0.0;  // Tr(R^t R) as a map from R^n
  double rho2_r = 0.0;    // largest eigenvalue of R^t R
  Matrix matrix;          // D x n, only when materialized
};

RegularizedOperator build_regularized(const TikhonovContext& ctx, double alpha,
                                      bool materialize = false);
/// Convenience overload building the singular system from a model projector.
RegularizedOperator build_regularized(const LinearizationMatrix& T, const SubspaceLadder& ladder,
                                      const ModelProjector& projector, double alpha,
                                      bool materialize = false);

/// r sigma^2 (1 + L_k) (Tr(R^t R) + rho^2(R)).
double pen_tikhonov(const RegularizedOperator& reg, double r, double L_k, double sigma);

/// x_hat - x_star for one alpha. Linear F: x_star + R_alpha (y - F(x_star)).
/// Nonlinear F: Gauss-Newton with surrogate Jacobian T on
/// ||Pi_{Y_{m0}}(y - F(x))||_n^2 + alpha ||x - x_star||^2.
FitResult fit_tikhonov(const TikhonovContext& ctx, const ObservationSet& obs,
                       const RegularizedOperator& reg, const SolverConfig& config = {});

/// ||R_alpha (y - F(x_star + z))||^2.
double tikhonov_contrast(const TikhonovContext& ctx, const ObservationSet& obs,
                         const RegularizedOperator& reg, const Vector& z);

struct TikhonovOptions {
  SolverConfig solver;
  bool keep_candidate_coefficients = false;
};

/// Fits every admissible alpha_k (d_{m0} >= alpha_k^{-1/(2p)}) and returns the
/// one minimizing ||R_alpha(y - F(x_hat_alpha))||^2 + pen(alpha); ties go to the
/// larger alpha. Throws ConfigError when no grid point is admissible.
EstimatorReport select_tikhonov(const TikhonovContext& ctx, const ObservationSet& obs,
                                const AlphaGrid& grid, double r, double sigma,
                                const TikhonovOptions& options = {});

/// Whether alpha passes the d_{m0} >= alpha^{-1/(2p)} gate.
bool alpha_admissible(double alpha, std::size_t d_m0, double p);

}  // namespace ipest
