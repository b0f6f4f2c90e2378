#pragma once

#include <string>
#include <vector>

#include "ipest/concentration.hpp"
#include "ipest/design.hpp"
#include "ipest/harness.hpp"
#include "ipest/report.hpp"

namespace ipest {

std::string to_json(const EstimatorReport& report);
std::string to_json(const RateReport& report);
std::string to_json(const ConcentrationReport& report);
std::string to_json(const std::vector<ConcentrationReport>& reports,
                    const std::vector<MomentCheck>& moments);

void write_text_file(const std::string& path, const std::string& content);

/// CSV with a header row and columns t, y (extra columns ignored).
ObservationSet read_observation_csv(const std::string& path, double sigma);
void write_observation_csv(const std::string& path, const DesignGrid& grid, const Vector& y,
                           const Vector& clean = {});

void write_vector_csv(const std::string& path, const Vector& v, const std::string& column);
/// Numeric matrix, one row per line, optional non-numeric header line.
Matrix read_matrix_csv(const std::string& path);

/// n, replicate, sq_error, best_sq_error, ratio, obs_risk, selected, selected_dim, selected_alpha, failed
void write_replicates_csv(const std::string& path, const RateReport& report);
/// n, mean_sq_error, median_sq_error, oracle_ratio
void write_summary_csv(const std::string& path, const RateReport& report);
/// u, empirical, bound
void write_tail_csv(const std::string& path, const ConcentrationReport& report);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace ipest
