#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ipest/nonordered.hpp"
#include "ipest/noise.hpp"
#include "ipest/operators.hpp"
#include "ipest/ordered.hpp"
#include "ipest/subspaces.hpp"
#include "ipest/tikhonov.hpp"

namespace ipest {

enum class EstimatorKind { ordered, nonordered, tikhonov };
EstimatorKind parse_estimator_kind(std::string_view name);
std::string_view to_string(EstimatorKind kind);

struct OperatorSpec {
  OperatorKind kind = OperatorKind::diagonal;
  std::size_t D = 64;
  double p = 1.0;
  Vector b;  // explicit diagonal values; empty means b_j = j^{-p}
  LinkFunction link;
  double rho = std::numeric_limits<double>::infinity();
  double c_T = 0.0;
  Vector x_star;  // empty means zero
};

ForwardOperator build_operator(const OperatorSpec& spec, const DesignGrid& grid);

struct LadderSpec {
  LadderFamily family = LadderFamily::singular;
  std::vector<std::size_t> dims;  // singular: explicit dims, or 1..max_dim when empty
  std::size_t max_dim = 0;
  unsigned depth = 3;  // histogram
};

SubspaceLadder build_ladder(const LadderSpec& spec, const ForwardOperator& op);

enum class OmegaKind { critical, gaussian, explicit_values };

struct SourceConfig {
  double nu = 0.5;
  OmegaKind omega = OmegaKind::critical;
  Vector omega_values;
  std::uint64_t omega_seed = 12345;
  double radius = 1.0;
};

struct EstimatorParams {
  double r = 2.5;
  double L = 0.5;
  std::optional<std::size_t> m0_dim;  // reference level by dimension; default choose_m0
  NonOrderedOptions nonordered;
  NonOrderedMethod method = NonOrderedMethod::automatic;
  AlphaGrid alpha;
  SolverConfig solver;
};

struct ExperimentConfig {
  std::string name = "experiment";
  OperatorSpec op;
  LadderSpec ladder;
  EstimatorKind estimator = EstimatorKind::ordered;
  EstimatorParams params;
  SourceConfig source;
  NoiseKind noise_kind = NoiseKind::gaussian;
  double sigma = 0.1;
  std::vector<std::size_t> n_grid{256};
  std::size_t replicates = 1;
  std::uint64_t seed = 0;
  std::size_t reference_n = 0;  // grid on which x0 is generated; 0 means max n
  bool diagnostics = true;
  std::size_t af_pairs = 256;
  unsigned threads = 0;

  void validate() const;
};

struct Instance {
  Vector x0;
  Vector clean;  // F(x0) on the grid
  ObservationSet obs;
};

struct ReplicateRecord {
  std::size_t n = 0;
  std::size_t replicate = 0;
  double sq_error = 0.0;
  double best_sq_error = 0.0;
  double ratio = 0.0;
  double obs_risk = 0.0;  // ||F(x_hat) - F(x0)||_n^2
  std::size_t selected = 0;
  std::size_t selected_dim = 0;
  double selected_alpha = 0.0;
  bool converged = true;
  bool failed = false;
  std::string message;
};

struct NSummary {
  std::size_t n = 0;
  std::size_t m0_dim = 0;
  std::size_t ok = 0;
  std::size_t failed = 0;
  double mean_sq_error = 0.0;
  double median_sq_error = 0.0;
  double oracle_ratio = 0.0;  // median of per-replicate ratios
  double mean_obs_risk = 0.0;
  double median_selected_dim = 0.0;
  double p95_selected_dim = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// OLS of log(error) on log(n). Needs >= 3 distinct n with positive errors.
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points);

struct HarnessDiagnostics {
  bool computed = false;
  std::size_t n = 0;
  double c_T_estimate = 0.0;
  AsDiagnostic as;
};

struct RateReport {
  std::string name;
  std::string estimator;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  double nu = 0.0;
  double p = 0.0;
  std::size_t replicates = 0;
  std::vector<NSummary> per_n;
  std::vector<ReplicateRecord> records;
  bool slope_fitted = false;
  std::string slope_note;
  SlopeFit slope;
  double theoretical_exponent = 0.0;  // -2 rate_exponent(nu, p)
  double failed_fraction = 0.0;
  bool sweep_failed = false;
  double x0_norm = 0.0;
  HarnessDiagnostics diagnostics;
  std::vector<std::string> warnings;
};

/// Per-experiment state: x0 and the per-n operators, ladders and estimator
/// contexts, built once and shared read-only by every replicate.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);
  ~Experiment();
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  const ExperimentConfig& config() const { return config_; }
  const Vector& x0() const { return x0_; }

  Instance instance(std::size_t n, std::size_t replicate) const;
  ReplicateRecord run_replicate(std::size_t n, std::size_t replicate) const;
  /// Full estimator report for one replicate.
  EstimatorReport estimate(std::size_t n, const ObservationSet& obs, bool keep_candidates) const;
  const ForwardOperator& op(std::size_t n) const;
  const SubspaceLadder& ladder(std::size_t n) const;
  std::size_t m0_level(std::size_t n) const;

 private:
  struct Setup;
  const Setup& setup(std::size_t n) const;
  ExperimentConfig config_;
  Vector x0_;
  std::vector<std::unique_ptr<Setup>> setups_;
};

/// x0 and one noisy observation set for (n, replicate).
Instance generate_instance(const ExperimentConfig& config, std::size_t n, std::size_t replicate);

RateReport run_sweep(const ExperimentConfig& config);

inline constexpr double kMaxFailedFraction = 0.05;

}  // namespace ipest
