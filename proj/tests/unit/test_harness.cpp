#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"

using namespace ipest;
using namespace ipest::testing;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.name = "small";
  c.op.kind = OperatorKind::diagonal;
  c.op.D = 32;
  c.ladder.max_dim = 16;
  c.sigma = 0.05;
  c.n_grid = {64, 128, 256};
  c.replicates = 3;
  c.seed = 42;
  c.threads = 1;
  c.af_pairs = 16;
  return c;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ipest_" + name)).string();
}

}  // namespace

TEST_CASE("instances are deterministic and replicates differ only in noise") {
  const ExperimentConfig c = small_config();
  const Instance a = generate_instance(c, 128, 0);
  const Instance b = generate_instance(c, 128, 0);
  const Instance other = generate_instance(c, 128, 1);
  CHECK(a.x0 == b.x0);
  CHECK(a.obs.values() == b.obs.values());
  CHECK(a.x0 == other.x0);
  CHECK(a.clean == other.clean);
  CHECK(a.obs.values() != other.obs.values());
  CHECK(a.obs.sigma() == c.sigma);
  // x0 depends on the config seed
  ExperimentConfig c2 = c;
  c2.source.omega = OmegaKind::gaussian;
  c2.source.omega_seed = 7;
  CHECK(generate_instance(c2, 128, 0).x0 != a.x0);
}

TEST_CASE("fit_slope") {
  std::vector<std::pair<double, double>> pts;
  for (double n : {100.0, 1000.0, 10000.0}) pts.emplace_back(n, 3.0 * std::pow(n, -0.5));
  const SlopeFit f = fit_slope(pts);
  CHECK(f.slope == doctest::Approx(-0.5));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK_THROWS_AS(fit_slope({{1.0, 1.0}, {2.0, 1.0}}), DegenerateFitError);
  CHECK_THROWS_AS(fit_slope({{1.0, 1.0}, {2.0, 0.0}, {4.0, 1.0}}), DegenerateFitError);
  CHECK_THROWS_AS(fit_slope({{1.0, 1.0}, {1.0, 2.0}, {2.0, 1.0}}), DegenerateFitError);
}

TEST_CASE("noiseless sweep skips the slope") {
  ExperimentConfig c = small_config();
  c.sigma = 0.0;
  c.ladder.max_dim = 32;  // the top level spans x0, so the fit is exact
  c.replicates = 1;
  const RateReport rep = run_sweep(c);
  CHECK_FALSE(rep.slope_fitted);
  CHECK(rep.slope_note.rfind("degenerate", 0) == 0);
  CHECK_FALSE(rep.sweep_failed);
  for (const ReplicateRecord& r : rep.records) CHECK(r.sq_error <= 1e-24);
}

TEST_CASE("small sweep") {
  const ExperimentConfig c = small_config();
  const RateReport rep = run_sweep(c);
  REQUIRE(rep.per_n.size() == 3);
  CHECK(rep.records.size() == 9);
  CHECK(rep.slope_fitted);
  CHECK(rep.failed_fraction == 0.0);
  for (const NSummary& s : rep.per_n) {
    CHECK(s.ok == 3);
    CHECK(s.oracle_ratio >= 1.0);
  }
  CHECK(rep.theoretical_exponent == doctest::Approx(-2.0 * rate_exponent(0.5, 1.0)));
  ExperimentConfig threaded = c;
  threaded.threads = 3;
  CHECK(to_json(run_sweep(threaded)) == to_json(rep));
}

TEST_CASE("config parsing") {
  const std::string text = R"({
    "name": "t",
    "operator": {"kind": "volterra", "D": 16},
    "ladder": {"family": "histogram", "depth": 3},
    "estimator": {"kind": "tikhonov", "r": 3.0,
                  "alpha": {"alpha0": 1.0, "q": 0.5, "K": 8, "c_L": 1.0}},
    "noise": {"kind": "bounded-uniform", "sigma": 0.2},
    "n_grid": [128, 256],
    "replicates": 2,
    "seed": 5
  })";
  const ExperimentConfig c = parse_experiment_config(text);
  CHECK(c.name == "t");
  CHECK(c.op.kind == OperatorKind::volterra);
  CHECK(c.op.D == 16);
  CHECK(c.ladder.family == LadderFamily::histogram);
  CHECK(c.estimator == EstimatorKind::tikhonov);
  CHECK(c.params.r == 3.0);
  CHECK(c.params.alpha.K == 8);
  CHECK(c.noise_kind == NoiseKind::bounded_uniform);
  CHECK(c.sigma == 0.2);
  CHECK(c.n_grid == std::vector<std::size_t>{128, 256});
  CHECK(c.seed == 5);

  // canonical form parses back to the same canonical form
  const std::string canon = experiment_config_to_json(c);
  CHECK(experiment_config_to_json(parse_experiment_config(canon)) == canon);

  CHECK_THROWS_AS(parse_experiment_config(R"({"operatr": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"operator": {"kind": "diagonal", "DD": 4}})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"noise": {"sigma": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("{not json"), ConfigError);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"headline_ordered.json", "headline_tikhonov.json", "hammerstein.json",
                           "nonordered_diagonal.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_experiment_config(std::string(IPEST_CONFIG_DIR) + "/" + name).validate());
  }
}

TEST_CASE("observation csv round trip") {
  const DesignGrid g = DesignGrid::uniform(5);
  const Vector y = vec({0.1, -1.0 / 3.0, 2.5e-17, 1e300, 0.0});
  const std::string path = temp_path("obs.csv");
  write_observation_csv(path, g, y, Vector::Zero(5));
  const ObservationSet back = read_observation_csv(path, 0.5);
  CHECK(back.values() == y);
  CHECK(back.grid() == g);
  CHECK(back.sigma() == 0.5);
  std::remove(path.c_str());
}

TEST_CASE("number formatting round trips") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) {
    const std::string s = format_double(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("matrix csv") {
  const std::string path = temp_path("m.csv");
  {
    std::ofstream f(path);
    f << "1,2,3\n4,5,6\n";
  }
  const Matrix A = read_matrix_csv(path);
  CHECK(A.rows() == 2);
  CHECK(A.cols() == 3);
  CHECK(A(1, 2) == 6.0);
  {
    std::ofstream f(path);
    f << "1,2\n3\n";
  }
  CHECK_THROWS(read_matrix_csv(path));
  std::remove(path.c_str());
}
