#include "ipest/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ipest/errors.hpp"
#include "ipest/linalg.hpp"
#include "ipest/parallel.hpp"

namespace ipest {

double eta(const Matrix& A, const Vector& eps) {
  if (A.cols() != eps.size())
    throw DimensionError("eta: A has " + std::to_string(A.cols()) + " columns but eps has length " +
                         std::to_string(eps.size()));
  return (A * eps).norm();
}

double eta_random_sup(const Matrix& A, const Vector& eps, std::size_t n_dirs, std::uint64_t seed) {
  if (A.cols() != eps.size()) throw DimensionError("eta_random_sup: dimension mismatch");
  const Vector v = A * eps;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector u(v.size());
  double best = 0.0;
  for (std::size_t k = 0; k < n_dirs; ++k) {
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = gauss(rng);
    const double nrm = u.norm();
    if (nrm == 0.0) continue;
    best = std::max(best, u.dot(v) / nrm);
  }
  return best;
}

ProjectionIdentity projection_identity_check(const SubspaceLadder& ladder, std::size_t level,
                                             const DesignGrid& grid, const Vector& eps) {
  if (grid.size() != ladder.n()) throw DimensionError("projection identity: grid size mismatch");
  const Vector a = ladder.orthonormal_coefficients(level, eps);
  const auto d = a.size();
  ProjectionIdentity out;
  // The linear functional v -> <eps, v>_n on the unit sphere of Y_m is
  // maximized at v = Q_m a / ||a||.
  const double na = a.norm();
  if (na > 0.0) {
    const Vector v = ladder.Q().leftCols(d) * (a / na);
    out.lhs = std::abs(empirical_inner(eps, v, grid));
  }
  out.rhs = empirical_norm(empirical_project(eps, ladder, level, grid).projected, grid);
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

double tail_threshold(double trace, double rho, double r, double L, double sigma, double u) {
  return sigma * sigma * (trace + rho) * (r / 2.0) * (1.0 + L) + sigma * sigma * u;
}

double tail_bound(double trace, double rho, double r, double L, double d, double u) {
  if (!(rho > 0.0)) return 0.0;
  return std::exp(-std::sqrt(d * (u / rho + (r / 2.0) * L * (trace / rho + 1.0))));
}

namespace {
constexpr std::size_t kBlock = 4096;

struct Spectrum {
  double trace;
  double rho;
};

Spectrum ata_spectrum(const Matrix& A) {
  const Matrix AtA = A.transpose() * A;
  return {AtA.trace(), max_eigenvalue(AtA)};
}
}  // namespace

std::vector<double> sample_eta_squared(const Matrix& A, const NoiseSpec& noise,
                                       std::size_t n_trials, unsigned threads) {
  std::vector<double> out(n_trials);
  const std::size_t blocks = (n_trials + kBlock - 1) / kBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    Rng rng(derive_seed(noise.seed, {b}));
    Vector eps(A.cols());
    const std::size_t end = std::min(n_trials, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      fill_noise(noise.kind, noise.sigma, rng, eps);
      out[i] = (A * eps).squaredNorm();
    }
  });
  return out;
}

ConcentrationReport tail_experiment(const Matrix& A, const std::string& matrix_id,
                                    const NoiseSpec& noise, const TailSettings& s) {
  if (s.n_trials < 1000) throw DomainError("tail_experiment needs at least 1000 trials");
  if (!(s.d > 0.0)) throw DomainError("tail_experiment needs d > 0");
  ConcentrationReport rep;
  rep.matrix_id = matrix_id;
  const Spectrum sp = ata_spectrum(A);
  rep.trace_ata = sp.trace;
  rep.rho_ata = sp.rho;
  rep.u_grid = s.u_grid;
  rep.d_used = s.d;
  rep.r_used = s.r;
  rep.L_used = s.L;
  rep.sigma = noise.sigma;
  rep.noise = noise.kind;
  rep.seed = noise.seed;
  rep.n_trials = s.n_trials;

  const std::vector<double> eta2 = sample_eta_squared(A, noise, s.n_trials, s.threads);
  const double N = static_cast<double>(s.n_trials);
  for (double u : s.u_grid) {
    const double thr = tail_threshold(sp.trace, sp.rho, s.r, s.L, noise.sigma, u);
    std::size_t hits = 0;
    for (double e : eta2)
      if (e >= thr && (thr > 0.0 || e > 0.0)) ++hits;
    const double p = static_cast<double>(hits) / N;
    const double se = std::sqrt(p * (1.0 - p) / N);
    const double bound = tail_bound(sp.trace, sp.rho, s.r, s.L, s.d, u);
    rep.threshold.push_back(thr);
    rep.empirical_tail.push_back(p);
    rep.standard_error.push_back(se);
    rep.analytic_bound.push_back(bound);
    const bool flag = p > bound + 3.0 * se;
    rep.flagged.push_back(flag);
    rep.any_flag = rep.any_flag || flag;
  }
  return rep;
}

namespace {
double moment_analytic(const Spectrum& sp, double sigma, double r, double L, double d, double q,
                       double C_q, double* k1_out, double* k2_out) {
  const double k1 = d / (sp.rho * sigma * sigma);
  const double k2 = d * (r / 2.0) * L * (sp.trace / sp.rho + 1.0);
  if (k1_out) *k1_out = k1;
  if (k2_out) *k2_out = k2;
  return C_q * std::pow(k1, -q) * (std::pow(k2, q - 0.5) + std::pow(k2, q - 1.0)) *
         std::exp(-std::sqrt(k2));
}

std::vector<double> positive_part_powers(const std::vector<double>& eta2, double thr, double q) {
  std::vector<double> v(eta2.size());
  for (std::size_t i = 0; i < eta2.size(); ++i) {
    const double e = eta2[i] - thr;
    v[i] = e > 0.0 ? std::pow(e, q) : 0.0;
  }
  return v;
}
}  // namespace

MomentCheck moment_bound_check(const Matrix& A, const NoiseSpec& noise, const MomentSettings& s) {
  if (!(s.q >= 1.0)) throw DomainError("moment_bound_check needs q >= 1");
  MomentCheck out;
  out.q = s.q;
  out.C_q = s.C_q;
  const Spectrum sp = ata_spectrum(A);
  if (noise.sigma == 0.0 || !(sp.rho > 0.0)) return out;

  const std::vector<double> eta2 = sample_eta_squared(A, noise, s.n_trials, s.threads);
  const double thr = tail_threshold(sp.trace, sp.rho, s.r, s.L, noise.sigma, 0.0);
  const std::vector<double> v = positive_part_powers(eta2, thr, s.q);
  const double N = static_cast<double>(v.size());
  out.empirical = pairwise_sum(v.begin(), v.end()) / N;

  if (s.bootstrap > 1) {
    std::vector<double> means(s.bootstrap);
    parallel_for(s.bootstrap, s.threads, [&](std::size_t b) {
      Rng rng(derive_seed(noise.seed ^ 0xb007ULL, {b}));
      std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
      std::vector<double> res(v.size());
      for (double& x : res) x = v[pick(rng)];
      means[b] = pairwise_sum(res.begin(), res.end()) / N;
    });
    const double mean = pairwise_sum(means.begin(), means.end()) / static_cast<double>(means.size());
    double ss = 0.0;
    for (double m : means) ss += (m - mean) * (m - mean);
    out.standard_error = std::sqrt(ss / static_cast<double>(means.size() - 1));
  }
  out.analytic = moment_analytic(sp, noise.sigma, s.r, s.L, s.d, s.q, s.C_q, &out.k1, &out.k2);
  out.ratio = out.analytic > 0.0 ? out.empirical / out.analytic : 0.0;
  return out;
}

std::vector<NamedMatrix> reference_family() {
  return {reference_matrix("identity-4"), reference_matrix("diag-harmonic-8"),
          reference_matrix("gaussian-8x32"), reference_matrix("projector-8of32")};
}

NamedMatrix reference_matrix(const std::string& id) {
  if (id == "identity-4") return {id, Matrix::Identity(4, 4)};
  if (id == "diag-harmonic-8") {
    Vector d(8);
    for (int j = 0; j < 8; ++j) d[j] = 1.0 / (j + 1);
    return {id, d.asDiagonal().toDenseMatrix()};
  }
  if (id == "gaussian-8x32" || id == "projector-8of32") {
    const bool proj = id == "projector-8of32";
    Rng rng(proj ? 0x5eed0002ULL : 0x5eed0001ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix G(proj ? 32 : 8, proj ? 8 : 32);
    for (Eigen::Index i = 0; i < G.rows(); ++i)
      for (Eigen::Index j = 0; j < G.cols(); ++j) G(i, j) = gauss(rng);
    if (!proj) return {id, G / std::sqrt(32.0)};
    const Matrix W = thin_qr(G).Q;
    return {id, W * W.transpose()};
  }
  throw ConfigError("unknown reference matrix '" + id + "'");
}

CalibrationResult calibrate_d(const std::vector<NamedMatrix>& family, const NoiseSpec& noise,
                              const TailSettings& settings, double margin) {
  struct Sampled {
    Spectrum sp;
    std::vector<double> tail;  // per u
  };
  std::vector<Sampled> data;
  for (const auto& m : family) {
    Sampled s{ata_spectrum(m.A), {}};
    const std::vector<double> eta2 = sample_eta_squared(m.A, noise, settings.n_trials, settings.threads);
    for (double u : settings.u_grid) {
      const double thr = tail_threshold(s.sp.trace, s.sp.rho, settings.r, settings.L, noise.sigma, u);
      std::size_t hits = 0;
      for (double e : eta2)
        if (e >= thr) ++hits;
      s.tail.push_back(static_cast<double>(hits) / static_cast<double>(eta2.size()));
    }
    data.push_back(std::move(s));
  }
  auto ok = [&](double d) {
    for (const auto& s : data)
      for (std::size_t k = 0; k < settings.u_grid.size(); ++k)
        if (s.tail[k] > tail_bound(s.sp.trace, s.sp.rho, settings.r, settings.L, d, settings.u_grid[k]))
          return false;
    return true;
  };
  double lo = 1e-6, hi = 1e3;
  if (!ok(lo)) throw DiagnosticError("calibrate_d: no admissible d above 1e-6");
  if (ok(hi)) lo = hi;
  for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-12; ++it) {
    const double mid = std::sqrt(lo * hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return {lo, lo * margin, margin};
}

CalibrationResult calibrate_cq(const std::vector<NamedMatrix>& family, const NoiseSpec& noise,
                               const MomentSettings& settings, double margin) {
  MomentSettings s = settings;
  s.C_q = 1.0;
  s.bootstrap = 0;
  double worst = 0.0;
  for (const auto& m : family) worst = std::max(worst, moment_bound_check(m.A, noise, s).ratio);
  return {worst, worst * margin, margin};
}

}  // namespace ipest
