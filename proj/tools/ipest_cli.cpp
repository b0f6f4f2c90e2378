#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ipest/ipest.hpp"

namespace fs = std::filesystem;
using namespace ipest;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  unsigned threads = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Master seed (overrides the config)");
  app->add_option("--out-dir", c.out_dir, "Directory for output files")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads, 0 = one per core")->capture_default_str();
}

std::string out_path(const Common& c, const std::string& file) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / file).string();
}

struct SelectArgs {
  std::string config;
  std::string obs;
  std::optional<double> sigma;
};

void add_select(CLI::App* app, SelectArgs& a) {
  app->add_option("--config", a.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option("--obs", a.obs, "Observation CSV with columns t, y")->required()->check(CLI::ExistingFile);
  app->add_option("--sigma", a.sigma, "Noise level (defaults to noise.sigma in the config)");
}

struct Problem {
  ExperimentConfig config;
  ObservationSet obs;
  ForwardOperator op;
  SubspaceLadder ladder;
};

Problem load_problem(const SelectArgs& a, const Common& c) {
  ExperimentConfig cfg = load_experiment_config(a.config);
  if (c.seed) cfg.seed = *c.seed;
  const double sigma = a.sigma.value_or(cfg.sigma);
  ObservationSet obs = read_observation_csv(a.obs, sigma);
  ForwardOperator op = build_operator(cfg.op, obs.grid());
  SubspaceLadder ladder = build_ladder(cfg.ladder, op);
  return {std::move(cfg), std::move(obs), std::move(op), std::move(ladder)};
}

std::size_t reference_level(const Problem& p) {
  if (p.config.params.m0_dim) {
    for (std::size_t m = 0; m < p.ladder.levels(); ++m)
      if (p.ladder.dim(m) == *p.config.params.m0_dim) return m;
    throw ConfigError("no ladder level has dimension " + std::to_string(*p.config.params.m0_dim));
  }
  return choose_m0(p.obs.size(), p.op.p(), p.ladder).level;
}

void write_report(const Common& c, const EstimatorReport& r) {
  write_text_file(out_path(c, "report.json"), to_json(r));
  write_vector_csv(out_path(c, "coefficients.csv"), r.estimate, "x_hat");
  std::cout << r.estimator << ": selected " << r.selected << " (dim " << r.selected_dim
            << "), criterion " << format_double(r.criterion) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive penalized estimation for ill-posed inverse problems"};
  app.require_subcommand(1);

  Common c_ord, c_non, c_tik, c_con, c_rates, c_sim, c_cal;

  SelectArgs ord_args;
  auto* ord = app.add_subcommand("select-ordered", "Ordered model selection on an observation file");
  add_select(ord, ord_args);
  add_common(ord, c_ord);

  SelectArgs non_args;
  auto* non = app.add_subcommand("select-nonordered", "Non-ordered selection inside a reference model");
  add_select(non, non_args);
  add_common(non, c_non);

  SelectArgs tik_args;
  std::optional<double> alpha0, q, r_tik;
  std::optional<std::size_t> K;
  auto* tik = app.add_subcommand("tikhonov", "Adaptive Tikhonov regularization over an alpha grid");
  add_select(tik, tik_args);
  tik->add_option("--alpha0", alpha0, "Largest alpha");
  tik->add_option("--q", q, "Grid ratio in (0, 1)");
  tik->add_option("--K", K, "Number of grid points");
  tik->add_option("--r", r_tik, "Penalty constant r > 2");
  add_common(tik, c_tik);

  std::string matrix = "all";
  std::string noise_name = "gaussian";
  double con_sigma = 1.0, con_r = 2.5, con_L = 0.5, con_d = kCalibratedD;
  std::size_t trials = 100000;
  std::optional<double> moment_q;
  auto* con = app.add_subcommand("concentration", "Monte Carlo tails of eta^2(A) against the analytic bound");
  con->add_option("--matrix", matrix,
                  "Reference matrix id (identity-4, diag-harmonic-8, gaussian-8x32, "
                  "projector-8of32), 'all', or a CSV file")
      ->capture_default_str();
  con->add_option("--noise", noise_name, "gaussian or bounded-uniform")->capture_default_str();
  con->add_option("--sigma", con_sigma)->capture_default_str();
  con->add_option("--trials", trials)->capture_default_str();
  con->add_option("--r", con_r)->capture_default_str();
  con->add_option("--L", con_L)->capture_default_str();
  con->add_option("--d", con_d, "Bound constant d")->capture_default_str();
  con->add_option("--moment", moment_q, "Also check the q-th moment bound (q = 1 or 2)");
  add_common(con, c_con);

  std::string rates_config;
  auto* rates = app.add_subcommand("rates", "Monte Carlo rate and oracle sweep");
  rates->add_option("--config", rates_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  add_common(rates, c_rates);

  std::string sim_config;
  std::optional<std::size_t> sim_n;
  std::size_t sim_rep = 0;
  auto* sim = app.add_subcommand("simulate", "Write one generated instance as CSV");
  sim->add_option("--config", sim_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--n", sim_n, "Sample size (defaults to the first n_grid entry)");
  sim->add_option("--replicate", sim_rep, "Replicate index")->capture_default_str();
  add_common(sim, c_sim);

  std::string cal_noise = "gaussian";
  double d_margin = 0.8, cq_margin = 1.25;
  auto* cal = app.add_subcommand("calibrate", "Recompute the concentration constants d and C_q");
  cal->add_option("--noise", cal_noise)->capture_default_str();
  cal->add_option("--trials", trials)->capture_default_str();
  cal->add_option("--d-margin", d_margin)->capture_default_str();
  cal->add_option("--cq-margin", cq_margin)->capture_default_str();
  add_common(cal, c_cal);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ord) {
      Problem p = load_problem(ord_args, c_ord);
      OrderedPenaltySpec spec{p.config.params.r, p.config.params.L, p.obs.sigma()};
      OrderedOptions opt;
      opt.solver = p.config.params.solver;
      write_report(c_ord, select_ordered(p.op, p.obs, p.ladder, spec, opt));
    } else if (*non) {
      Problem p = load_problem(non_args, c_non);
      NonOrderedOptions opt = p.config.params.nonordered;
      opt.seed = derive_seed(p.config.seed, {0x5a, p.obs.size()});
      const NonOrderedContext ctx = build_nonordered_context(p.op, p.ladder, reference_level(p), opt);
      NonOrderedSelectOptions sel;
      sel.method = p.config.params.method;
      sel.solver = p.config.params.solver;
      write_report(c_non, select_nonordered(ctx, p.obs, p.config.params.r, p.obs.sigma(), sel));
    } else if (*tik) {
      Problem p = load_problem(tik_args, c_tik);
      AlphaGrid grid = p.config.params.alpha;
      if (alpha0) grid.alpha0 = *alpha0;
      if (q) grid.q = *q;
      if (K) grid.K = *K;
      const double r = r_tik.value_or(p.config.params.r);
      const TikhonovContext ctx = make_tikhonov_context(p.op, p.ladder, reference_level(p));
      TikhonovOptions opt;
      opt.solver = p.config.params.solver;
      write_report(c_tik, select_tikhonov(ctx, p.obs, grid, r, p.obs.sigma(), opt));
    } else if (*con) {
      std::vector<NamedMatrix> family;
      if (matrix == "all") family = reference_family();
      else if (fs::exists(matrix)) family.push_back({fs::path(matrix).stem().string(), read_matrix_csv(matrix)});
      else family.push_back(reference_matrix(matrix));
      NoiseSpec noise{parse_noise_kind(noise_name), con_sigma, c_con.seed.value_or(0xACCE9700ULL)};
      TailSettings ts;
      ts.r = con_r;
      ts.L = con_L;
      ts.d = con_d;
      ts.n_trials = trials;
      ts.threads = c_con.threads;
      std::vector<ConcentrationReport> reports;
      std::vector<MomentCheck> moments;
      for (const auto& m : family) {
        reports.push_back(tail_experiment(m.A, m.id, noise, ts));
        write_tail_csv(out_path(c_con, "tail_" + m.id + ".csv"), reports.back());
        if (moment_q) {
          MomentSettings ms;
          ms.r = con_r;
          ms.L = con_L;
          ms.d = con_d;
          ms.q = *moment_q;
          ms.C_q = *moment_q == 2.0 ? kCalibratedCq2 : kCalibratedCq1;
          ms.n_trials = trials;
          ms.threads = c_con.threads;
          moments.push_back(moment_bound_check(m.A, noise, ms));
        }
        const auto& rep = reports.back();
        std::cout << m.id << ": " << (rep.any_flag ? "tail above bound" : "within bound") << "\n";
      }
      write_text_file(out_path(c_con, "concentration.json"), to_json(reports, moments));
      return std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.any_flag; }) ? 2 : 0;
    } else if (*rates) {
      ExperimentConfig cfg = load_experiment_config(rates_config);
      if (c_rates.seed) cfg.seed = *c_rates.seed;
      cfg.threads = c_rates.threads;
      const RateReport rep = run_sweep(cfg);
      write_text_file(out_path(c_rates, "rate_report.json"), to_json(rep));
      write_replicates_csv(out_path(c_rates, "replicates.csv"), rep);
      write_summary_csv(out_path(c_rates, "summary.csv"), rep);
      for (const auto& s : rep.per_n)
        std::cout << "n=" << s.n << " mean_sq_error=" << format_double(s.mean_sq_error)
                  << " oracle_ratio=" << format_double(s.oracle_ratio) << "\n";
      if (rep.slope_fitted)
        std::cout << "slope " << format_double(rep.slope.slope) << " (theory "
                  << format_double(rep.theoretical_exponent) << ")\n";
      else
        std::cout << "slope not fitted: " << rep.slope_note << "\n";
      return rep.sweep_failed ? 2 : 0;
    } else if (*sim) {
      ExperimentConfig cfg = load_experiment_config(sim_config);
      if (c_sim.seed) cfg.seed = *c_sim.seed;
      const std::size_t n = sim_n.value_or(cfg.n_grid.front());
      if (std::find(cfg.n_grid.begin(), cfg.n_grid.end(), n) == cfg.n_grid.end()) {
        cfg.n_grid.push_back(n);
        std::sort(cfg.n_grid.begin(), cfg.n_grid.end());
      }
      const Instance inst = generate_instance(cfg, n, sim_rep);
      write_observation_csv(out_path(c_sim, "observations.csv"), inst.obs.grid(), inst.obs.values(),
                            inst.clean);
      write_vector_csv(out_path(c_sim, "x0.csv"), inst.x0, "x0");
      std::cout << "wrote " << n << " observations\n";
    } else if (*cal) {
      NoiseSpec noise{parse_noise_kind(cal_noise), 1.0, c_cal.seed.value_or(0xCA11B0A7ULL)};
      TailSettings ts;
      ts.n_trials = trials;
      ts.threads = c_cal.threads;
      const auto family = reference_family();
      const CalibrationResult d = calibrate_d(family, noise, ts, d_margin);
      std::cout << "d: boundary " << format_double(d.boundary) << ", frozen " << format_double(d.frozen) << "\n";
      for (double qq : {1.0, 2.0}) {
        MomentSettings ms;
        ms.q = qq;
        ms.d = d.frozen;
        ms.n_trials = trials;
        ms.threads = c_cal.threads;
        const CalibrationResult cq = calibrate_cq(family, noise, ms, cq_margin);
        std::cout << "C_q (q=" << qq << "): boundary " << format_double(cq.boundary) << ", frozen "
                  << format_double(cq.frozen) << "\n";
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
