#pragma once

#include <cstddef>
#include <vector>

#include "ipest/operators.hpp"
#include "ipest/report.hpp"
#include "ipest/solver.hpp"
#include "ipest/subspaces.hpp"

namespace ipest {

struct OrderedPenaltySpec {
  double r = 2.5;
  double L = 0.5;
  double sigma = 1.0;
  void validate() const;
};

/// r (1 + L) sigma^2 (d_m + 1) / n.
double pen_ordered(std::size_t d_m, const OrderedPenaltySpec& spec, std::size_t n);

struct FitResult {
  Vector coefficients;         // z = x_hat - x_star, lies in X_m
  double projected_residual = 0.0;  // ||Pi_{Y_m}(y - F(x_hat))||_n^2
  double full_residual = 0.0;       // ||y - F(x_hat)||_n^2
  int iterations = 0;
  bool converged = true;
  SolverStatus status = SolverStatus::converged;
};

/// Per-level data shared by all fits on one (operator, ladder) pair.
class OrderedModel {
 public:
  OrderedModel(ForwardOperator op, SubspaceLadder ladder);

  const ForwardOperator& op() const { return op_; }
  const SubspaceLadder& ladder() const { return ladder_; }
  const ModelSystem& system(std::size_t level) const;
  std::size_t levels() const { return systems_.size(); }

 private:
  ForwardOperator op_;
  SubspaceLadder ladder_;
  std::vector<ModelSystem> systems_;
};

/// argmin over z in X_m, ||z|| <= rho of ||Pi_{Y_m}(y - F(x_star + z))||_n^2.
/// Damped Gauss-Newton with T as Jacobian surrogate; closed form when F is linear.
FitResult fit_in_model(const ForwardOperator& op, const ObservationSet& obs,
                       const SubspaceLadder& ladder, const ModelSystem& system,
                       const SolverConfig& config = {});
FitResult fit_in_model(const ForwardOperator& op, const ObservationSet& obs,
                       const SubspaceLadder& ladder, const ModelProjector& projector,
                       const SolverConfig& config = {});

struct OrderedOptions {
  SolverConfig solver;
  bool keep_candidate_coefficients = false;
};

/// Fits every level and returns the level minimizing
/// ||y - F(x_hat_m)||_n^2 + pen(m); ties go to the smallest level. The
/// report's empirical_risk is that full residual.
EstimatorReport select_ordered(const OrderedModel& model, const ObservationSet& obs,
                               const OrderedPenaltySpec& spec, const OrderedOptions& options = {});
EstimatorReport select_ordered(const ForwardOperator& op, const ObservationSet& obs,
                               const SubspaceLadder& ladder, const OrderedPenaltySpec& spec,
                               const OrderedOptions& options = {});

struct M0Choice {
  std::size_t level = 0;
  bool fallback = false;  // no level satisfied d <= n^{1/(2p)}
};

/// Largest level with d_m <= n^{1/(2p)}; the smallest level if none qualifies.
M0Choice choose_m0(std::size_t n, double p, const std::vector<std::size_t>& dims);
M0Choice choose_m0(std::size_t n, double p, const SubspaceLadder& ladder);

}  // namespace ipest
