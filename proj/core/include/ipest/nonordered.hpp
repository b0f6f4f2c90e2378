#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ipest/operators.hpp"
#include "ipest/ordered.hpp"
#include "ipest/report.hpp"
#include "ipest/solver.hpp"
#include "ipest/subspaces.hpp"

namespace ipest {

enum class SubsetUniverse { singletons_prefixes, power_set, custom };
enum class NonOrderedMethod { automatic, exhaustive, threshold };

SubsetUniverse parse_subset_universe(std::string_view name);
std::string_view to_string(SubsetUniverse u);
NonOrderedMethod parse_nonordered_method(std::string_view name);

inline constexpr std::size_t kMaxEnumeratedDim = 16;

struct NonOrderedOptions {
  SubsetUniverse universe = SubsetUniverse::singletons_prefixes;
  std::vector<std::vector<std::size_t>> custom_subsets;
  double c_L = 1.0;              // L_m = c_L log(d_{m0} / |m|) + 1
  std::size_t n_samples = 64;    // Latin-hypercube points for the sup in S_m
  std::uint64_t seed = 0;
  double fd_step = 1e-6;
};

/// Everything about the reference model m0 that the non-ordered estimator
/// needs. Subset indices refer to the columns of E, the right singular vectors
/// of M_{m0} ordered by decreasing singular value. The rows of S_full index the
/// orthonormal coordinates of Y_{m0}.
struct NonOrderedContext {
  ForwardOperator op;
  SubspaceLadder ladder;
  std::size_t m0 = 0;
  std::size_t d = 0;
  ModelSystem system;
  Matrix U;      // d x d
  Vector s;      // singular values of M_{m0}
  Matrix E;      // D x d
  Matrix S_full;  // d x d, entrywise sup |A^t Pi_{X_{m0}} R(x) e_j|
  Vector lambda;  // squared column norms of S_full
  bool decomposable = false;
  bool linear = true;
  double condition_number = 1.0;
  SubsetUniverse universe = SubsetUniverse::singletons_prefixes;
  std::vector<std::vector<std::size_t>> subsets;  // empty for the power set
  double c_L = 1.0;
  std::size_t n_samples = 0;
  std::vector<std::string> warnings;
};

NonOrderedContext build_nonordered_context(const ForwardOperator& op,
                                           const SubspaceLadder& ladder, std::size_t m0,
                                           const NonOrderedOptions& options = {});

/// Columns of S_full for the subset (d_{m0} x |m|).
Matrix build_S_m(const NonOrderedContext& ctx, const std::vector<std::size_t>& subset);

struct SubsetStats {
  double t = 0.0;    // Tr(S_m^t S_m)
  double rho = 0.0;  // largest eigenvalue of S_m^t S_m
  double L = 0.0;
};

SubsetStats subset_stats(const NonOrderedContext& ctx, const std::vector<std::size_t>& subset);

/// r sigma^2 (1 + L_m) (t_m + rho_m).
double pen_nonordered(const std::vector<std::size_t>& subset, const NonOrderedContext& ctx,
                      double r, double sigma);
double pen_nonordered(const SubsetStats& stats, double r, double sigma);

/// x_j = <A_{m0} (y - F(x_star)), e_j>, j < d_{m0}.
Vector nonordered_coordinates(const NonOrderedContext& ctx, const ObservationSet& obs);

struct NonOrderedSelectOptions {
  NonOrderedMethod method = NonOrderedMethod::automatic;
  SolverConfig solver;
  bool keep_candidate_coefficients = false;
};

/// Minimizes ||A_{m0}(y - F(x_m))||^2 + pen(m) over the registered subsets.
/// Linear F: closed form through the coordinates x_j; with a decomposable
/// penalty the threshold method solves the power-set problem exactly at any
/// d_{m0}. Nonlinear F: Gauss-Newton per subset.
EstimatorReport select_nonordered(const NonOrderedContext& ctx, const ObservationSet& obs,
                                  double r, double sigma,
                                  const NonOrderedSelectOptions& options = {});

/// Strict order used for ties: smaller cardinality, then lexicographic.
bool subset_precedes(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

}  // namespace ipest
