#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ipest/design.hpp"

namespace ipest {

/// One evaluated member of an estimator family (level, subset or alpha).
struct CandidateRecord {
  std::size_t index = 0;             // level, alpha index, or position in the universe
  std::size_t dim = 0;               // d_m, |m|, or d_{m0}
  std::vector<std::size_t> subset;   // non-ordered only
  double alpha = 0.0;                // tikhonov only
  double risk = 0.0;
  double penalty = 0.0;
  double criterion = 0.0;
  int iterations = 0;
  bool converged = true;
  Vector coefficients;  // x_hat - x_star; kept only on request
};

struct EstimatorReport {
  std::string estimator;  // "ordered", "nonordered", "tikhonov"
  std::size_t selected = 0;  // level, alpha index, or position in the universe
  std::size_t selected_dim = 0;
  std::vector<std::size_t> selected_subset;
  double selected_alpha = 0.0;
  Vector coefficients;  // x_hat - x_star
  Vector estimate;      // x_hat
  double empirical_risk = 0.0;
  double penalty = 0.0;
  double criterion = 0.0;
  int solver_iterations = 0;
  bool solver_converged = true;
  std::size_t m0 = 0;  // reference level (non-ordered, tikhonov)
  std::vector<CandidateRecord> candidates;
  std::vector<std::string> warnings;
};

}  // namespace ipest
