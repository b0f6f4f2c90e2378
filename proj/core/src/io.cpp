#include "ipest/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ipest/errors.hpp"

namespace ipest {

using nlohmann::ordered_json;

namespace {

ordered_json num(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

ordered_json vec(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

ordered_json vec(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

}  // namespace

std::string format_double(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string to_json(const EstimatorReport& r) {
  ordered_json j;
  j["estimator"] = r.estimator;
  j["selected"] = r.selected;
  j["selected_dim"] = r.selected_dim;
  if (r.estimator == "nonordered") {
    j["m0"] = r.m0;
    j["selected_subset"] = r.selected_subset;
  }
  if (r.estimator == "tikhonov") {
    j["m0"] = r.m0;
    j["selected_alpha"] = num(r.selected_alpha);
  }
  j["empirical_risk"] = num(r.empirical_risk);
  j["penalty"] = num(r.penalty);
  j["criterion"] = num(r.criterion);
  j["solver_iterations"] = r.solver_iterations;
  j["solver_converged"] = r.solver_converged;
  j["coefficients"] = vec(r.coefficients);
  j["estimate"] = vec(r.estimate);
  ordered_json cands = ordered_json::array();
  for (const auto& c : r.candidates) {
    ordered_json cj;
    cj["index"] = c.index;
    cj["dim"] = c.dim;
    if (!c.subset.empty()) cj["subset"] = c.subset;
    if (r.estimator == "tikhonov") cj["alpha"] = num(c.alpha);
    cj["risk"] = num(c.risk);
    cj["penalty"] = num(c.penalty);
    cj["criterion"] = num(c.criterion);
    cj["iterations"] = c.iterations;
    cj["converged"] = c.converged;
    cands.push_back(std::move(cj));
  }
  j["candidates"] = std::move(cands);
  j["warnings"] = r.warnings;
  return j.dump(2);
}

std::string to_json(const RateReport& r) {
  ordered_json j;
  j["name"] = r.name;
  j["estimator"] = r.estimator;
  j["seed"] = r.seed;
  j["sigma"] = num(r.sigma);
  j["nu"] = num(r.nu);
  j["p"] = num(r.p);
  j["replicates"] = r.replicates;
  j["x0_norm"] = num(r.x0_norm);
  j["theoretical_exponent"] = num(r.theoretical_exponent);
  j["slope_fitted"] = r.slope_fitted;
  j["slope_note"] = r.slope_note;
  j["fitted_slope"] = r.slope_fitted ? num(r.slope.slope) : ordered_json(nullptr);
  j["intercept"] = r.slope_fitted ? num(r.slope.intercept) : ordered_json(nullptr);
  j["r_squared"] = r.slope_fitted ? num(r.slope.r_squared) : ordered_json(nullptr);
  j["failed_fraction"] = num(r.failed_fraction);
  j["sweep_failed"] = r.sweep_failed;
  ordered_json per = ordered_json::array();
  for (const auto& s : r.per_n) {
    ordered_json sj;
    sj["n"] = s.n;
    if (s.m0_dim) sj["m0_dim"] = s.m0_dim;
    sj["ok"] = s.ok;
    sj["failed"] = s.failed;
    sj["mean_sq_error"] = num(s.mean_sq_error);
    sj["median_sq_error"] = num(s.median_sq_error);
    sj["oracle_ratio"] = num(s.oracle_ratio);
    sj["mean_obs_risk"] = num(s.mean_obs_risk);
    sj["median_selected_dim"] = num(s.median_selected_dim);
    sj["p95_selected_dim"] = num(s.p95_selected_dim);
    per.push_back(std::move(sj));
  }
  j["per_n"] = std::move(per);
  ordered_json reps = ordered_json::array();
  for (const auto& rec : r.records) {
    ordered_json rj;
    rj["n"] = rec.n;
    rj["replicate"] = rec.replicate;
    rj["sq_error"] = num(rec.sq_error);
    rj["best_sq_error"] = num(rec.best_sq_error);
    rj["ratio"] = num(rec.ratio);
    rj["obs_risk"] = num(rec.obs_risk);
    rj["selected"] = rec.selected;
    rj["selected_dim"] = rec.selected_dim;
    if (r.estimator == "tikhonov") rj["selected_alpha"] = num(rec.selected_alpha);
    rj["converged"] = rec.converged;
    rj["failed"] = rec.failed;
    if (!rec.message.empty()) rj["message"] = rec.message;
    reps.push_back(std::move(rj));
  }
  j["records"] = std::move(reps);
  if (r.diagnostics.computed) {
    ordered_json d;
    d["n"] = r.diagnostics.n;
    d["c_T_estimate"] = num(r.diagnostics.c_T_estimate);
    d["dims"] = r.diagnostics.as.dims;
    d["gamma"] = vec(r.diagnostics.as.gamma);
    d["gamma_upper"] = vec(r.diagnostics.as.gamma_upper);
    d["as_ratio"] = vec(r.diagnostics.as.ratio);
    d["as_band"] = {num(r.diagnostics.as.band_low), num(r.diagnostics.as.band_high)};
    j["diagnostics"] = std::move(d);
  }
  j["warnings"] = r.warnings;
  return j.dump(2);
}

namespace {
ordered_json concentration_json(const ConcentrationReport& r) {
  ordered_json j;
  j["matrix_id"] = r.matrix_id;
  j["trace_ata"] = num(r.trace_ata);
  j["rho_ata"] = num(r.rho_ata);
  j["noise"] = std::string(to_string(r.noise));
  j["sigma"] = num(r.sigma);
  j["seed"] = r.seed;
  j["n_trials"] = r.n_trials;
  j["d_used"] = num(r.d_used);
  j["r_used"] = num(r.r_used);
  j["L_used"] = num(r.L_used);
  j["u_grid"] = vec(r.u_grid);
  j["threshold"] = vec(r.threshold);
  j["empirical_tail"] = vec(r.empirical_tail);
  j["standard_error"] = vec(r.standard_error);
  j["analytic_bound"] = vec(r.analytic_bound);
  j["flagged"] = r.flagged;
  j["any_flag"] = r.any_flag;
  return j;
}
}  // namespace

std::string to_json(const ConcentrationReport& r) { return concentration_json(r).dump(2); }

std::string to_json(const std::vector<ConcentrationReport>& reports,
                    const std::vector<MomentCheck>& moments) {
  ordered_json j;
  ordered_json arr = ordered_json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    ordered_json rj = concentration_json(reports[i]);
    if (i < moments.size()) {
      const MomentCheck& m = moments[i];
      rj["moment"] = {{"q", num(m.q)},         {"C_q", num(m.C_q)},
                      {"empirical", num(m.empirical)}, {"standard_error", num(m.standard_error)},
                      {"analytic", num(m.analytic)},   {"ratio", num(m.ratio)},
                      {"k1", num(m.k1)},               {"k2", num(m.k2)}};
    }
    arr.push_back(std::move(rj));
  }
  j["reports"] = std::move(arr);
  return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!content.empty() && content.back() != '\n') out << '\n';
}

namespace {
std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}
}  // namespace

ObservationSet read_observation_csv(const std::string& path, double sigma) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open observation file '" + path + "'");
  std::string line;
  std::size_t t_col = 0, y_col = 1;
  std::vector<double> t, y;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (first) {
      first = false;
      double dummy;
      if (!parse_number(cells[0], dummy)) {
        bool have_t = false, have_y = false;
        for (std::size_t k = 0; k < cells.size(); ++k) {
          if (cells[k] == "t") { t_col = k; have_t = true; }
          if (cells[k] == "y") { y_col = k; have_y = true; }
        }
        if (!have_t || !have_y) throw ConfigError(path + ": header must name columns t and y");
        continue;
      }
    }
    double tv, yv;
    if (cells.size() <= std::max(t_col, y_col) || !parse_number(cells[t_col], tv) ||
        !parse_number(cells[y_col], yv))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed row");
    t.push_back(tv);
    y.push_back(yv);
  }
  if (t.empty()) throw ConfigError(path + ": no observations");
  Vector values = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
  return ObservationSet(DesignGrid(std::move(t)), std::move(values), sigma);
}

void write_observation_csv(const std::string& path, const DesignGrid& grid, const Vector& y,
                           const Vector& clean) {
  std::ostringstream os;
  os << (clean.size() ? "t,y,f\n" : "t,y\n");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    os << format_double(grid[i]) << ',' << format_double(y[static_cast<Eigen::Index>(i)]);
    if (clean.size()) os << ',' << format_double(clean[static_cast<Eigen::Index>(i)]);
    os << '\n';
  }
  write_text_file(path, os.str());
}

void write_vector_csv(const std::string& path, const Vector& v, const std::string& column) {
  std::ostringstream os;
  os << "index," << column << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << i << ',' << format_double(v[i]) << '\n';
  write_text_file(path, os.str());
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    std::vector<double> row;
    bool numeric = true;
    for (const auto& c : cells) {
      double v;
      if (!parse_number(c, v)) { numeric = false; break; }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) { first = false; continue; }
      throw ConfigError(path + ": non-numeric matrix entry");
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError(path + ": rows have different lengths");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path + ": empty matrix");
  Matrix A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return A;
}

void write_replicates_csv(const std::string& path, const RateReport& r) {
  std::ostringstream os;
  os << "n,replicate,sq_error,best_sq_error,ratio,obs_risk,selected,selected_dim,selected_alpha,failed\n";
  for (const auto& rec : r.records)
    os << rec.n << ',' << rec.replicate << ',' << format_double(rec.sq_error) << ','
       << format_double(rec.best_sq_error) << ',' << format_double(rec.ratio) << ','
       << format_double(rec.obs_risk) << ',' << rec.selected << ',' << rec.selected_dim << ','
       << format_double(rec.selected_alpha) << ',' << (rec.failed ? 1 : 0) << '\n';
  write_text_file(path, os.str());
}

void write_summary_csv(const std::string& path, const RateReport& r) {
  std::ostringstream os;
  os << "n,mean_sq_error,median_sq_error,oracle_ratio\n";
  for (const auto& s : r.per_n)
    os << s.n << ',' << format_double(s.mean_sq_error) << ',' << format_double(s.median_sq_error)
       << ',' << format_double(s.oracle_ratio) << '\n';
  write_text_file(path, os.str());
}

void write_tail_csv(const std::string& path, const ConcentrationReport& r) {
  std::ostringstream os;
  os << "u,empirical,bound\n";
  for (std::size_t k = 0; k < r.u_grid.size(); ++k)
    os << format_double(r.u_grid[k]) << ',' << format_double(r.empirical_tail[k]) << ','
       << format_double(r.analytic_bound[k]) << '\n';
  write_text_file(path, os.str());
}

}  // namespace ipest
