#include "ipest/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ipest/errors.hpp"

namespace ipest {

using nlohmann::json;

namespace {

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("bad value for '") + key + "': " + ex.what());
  }
}

Vector get_vector(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  const auto v = get<std::vector<double>>(j, key, {});
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

double get_radius(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::infinity();
  return get<double>(j, key, 0.0);
}

LinkFunction parse_link(const json& j) {
  check_keys(j, "operator.link", {"kind", "a", "b", "c", "K"});
  LinkFunction f;
  f.kind = parse_link_kind(get<std::string>(j, "kind", "affine"));
  f.a = get<double>(j, "a", f.kind == LinkKind::sine ? 0.1 : 1.0);
  f.b = get<double>(j, "b", 0.0);
  f.c = get<double>(j, "c", 0.0);
  f.K = get<double>(j, "K", 1.0);
  return f;
}

SolverConfig parse_solver(const json& j) {
  check_keys(j, "estimator.solver", {"max_iterations", "max_halvings", "gradient_tol",
                                        "stationarity_rel"});
  SolverConfig s;
  s.max_iterations = get<int>(j, "max_iterations", s.max_iterations);
  s.max_halvings = get<int>(j, "max_halvings", s.max_halvings);
  s.gradient_tol = get<double>(j, "gradient_tol", s.gradient_tol);
  s.stationarity_rel = get<double>(j, "stationarity_rel", s.stationarity_rel);
  return s;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  check_keys(root, "config", {"name", "operator", "ladder", "estimator", "source", "noise",
                              "n_grid", "replicates", "seed", "reference_n", "diagnostics",
                              "threads"});
  ExperimentConfig c;
  c.name = get<std::string>(root, "name", c.name);

  if (root.contains("operator")) {
    const json& o = root.at("operator");
    check_keys(o, "operator", {"kind", "D", "p", "b", "rho", "c_T", "x_star", "link"});
    c.op.kind = parse_operator_kind(get<std::string>(o, "kind", "diagonal"));
    c.op.D = get<std::size_t>(o, "D", c.op.D);
    c.op.p = get<double>(o, "p", c.op.p);
    c.op.b = get_vector(o, "b");
    if (c.op.b.size() > 0 && !o.contains("D")) c.op.D = static_cast<std::size_t>(c.op.b.size());
    c.op.rho = get_radius(o, "rho");
    c.op.c_T = get<double>(o, "c_T", 0.0);
    c.op.x_star = get_vector(o, "x_star");
    if (o.contains("link")) c.op.link = parse_link(o.at("link"));
  }

  if (root.contains("ladder")) {
    const json& l = root.at("ladder");
    check_keys(l, "ladder", {"family", "dims", "max_dim", "depth"});
    c.ladder.family = parse_ladder_family(get<std::string>(l, "family", "singular"));
    c.ladder.dims = get<std::vector<std::size_t>>(l, "dims", {});
    c.ladder.max_dim = get<std::size_t>(l, "max_dim", 0);
    c.ladder.depth = get<unsigned>(l, "depth", c.ladder.depth);
  }

  if (root.contains("estimator")) {
    const json& e = root.at("estimator");
    check_keys(e, "estimator", {"kind", "r", "L", "m0_dim", "universe", "subsets", "method", "c_L",
                                "n_samples", "alpha", "solver"});
    c.estimator = parse_estimator_kind(get<std::string>(e, "kind", "ordered"));
    c.params.r = get<double>(e, "r", c.params.r);
    c.params.L = get<double>(e, "L", c.params.L);
    if (e.contains("m0_dim") && !e.at("m0_dim").is_null())
      c.params.m0_dim = get<std::size_t>(e, "m0_dim", 0);
    c.params.nonordered.universe =
        parse_subset_universe(get<std::string>(e, "universe", "singletons-prefixes"));
    c.params.nonordered.custom_subsets =
        get<std::vector<std::vector<std::size_t>>>(e, "subsets", {});
    c.params.method = parse_nonordered_method(get<std::string>(e, "method", "auto"));
    c.params.nonordered.c_L = get<double>(e, "c_L", c.params.nonordered.c_L);
    c.params.nonordered.n_samples = get<std::size_t>(e, "n_samples", c.params.nonordered.n_samples);
    if (e.contains("alpha")) {
      const json& a = e.at("alpha");
      check_keys(a, "estimator.alpha", {"alpha0", "q", "K", "c_L"});
      c.params.alpha.alpha0 = get<double>(a, "alpha0", c.params.alpha.alpha0);
      c.params.alpha.q = get<double>(a, "q", c.params.alpha.q);
      c.params.alpha.K = get<std::size_t>(a, "K", c.params.alpha.K);
      c.params.alpha.c_L = get<double>(a, "c_L", c.params.alpha.c_L);
    }
    if (e.contains("solver")) c.params.solver = parse_solver(e.at("solver"));
  }

  if (root.contains("source")) {
    const json& s = root.at("source");
    check_keys(s, "source", {"nu", "omega", "seed", "radius"});
    c.source.nu = get<double>(s, "nu", c.source.nu);
    c.source.omega_seed = get<std::uint64_t>(s, "seed", c.source.omega_seed);
    c.source.radius = get<double>(s, "radius", c.source.radius);
    if (s.contains("omega")) {
      const json& w = s.at("omega");
      if (w.is_string()) {
        const auto name = w.get<std::string>();
        if (name == "critical") c.source.omega = OmegaKind::critical;
        else if (name == "gaussian") c.source.omega = OmegaKind::gaussian;
        else throw ConfigError("source.omega must be \"critical\", \"gaussian\" or an array");
      } else if (w.is_array()) {
        c.source.omega = OmegaKind::explicit_values;
        c.source.omega_values = get_vector(s, "omega");
      } else {
        throw ConfigError("source.omega must be a string or an array");
      }
    }
  }

  if (root.contains("noise")) {
    const json& n = root.at("noise");
    check_keys(n, "noise", {"kind", "sigma"});
    c.noise_kind = parse_noise_kind(get<std::string>(n, "kind", "gaussian"));
    c.sigma = get<double>(n, "sigma", c.sigma);
  }

  c.n_grid = get<std::vector<std::size_t>>(root, "n_grid", c.n_grid);
  c.replicates = get<std::size_t>(root, "replicates", c.replicates);
  c.seed = get<std::uint64_t>(root, "seed", c.seed);
  c.reference_n = get<std::size_t>(root, "reference_n", c.reference_n);
  c.threads = get<unsigned>(root, "threads", c.threads);
  if (root.contains("diagnostics")) {
    const json& d = root.at("diagnostics");
    check_keys(d, "diagnostics", {"enabled", "af_pairs"});
    c.diagnostics = get<bool>(d, "enabled", c.diagnostics);
    c.af_pairs = get<std::size_t>(d, "af_pairs", c.af_pairs);
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  json o;
  o["kind"] = std::string(to_string(c.op.kind));
  o["D"] = c.op.D;
  o["p"] = c.op.p;
  if (c.op.b.size() > 0) o["b"] = to_std(c.op.b);
  o["rho"] = std::isfinite(c.op.rho) ? json(c.op.rho) : json(nullptr);
  o["c_T"] = c.op.c_T;
  if (c.op.x_star.size() > 0) o["x_star"] = to_std(c.op.x_star);
  if (c.op.kind == OperatorKind::hammerstein)
    o["link"] = {{"kind", std::string(to_string(c.op.link.kind))}, {"a", c.op.link.a},
                 {"b", c.op.link.b}, {"c", c.op.link.c}, {"K", c.op.link.K}};
  j["operator"] = o;
  json l;
  l["family"] = std::string(to_string(c.ladder.family));
  if (c.ladder.family == LadderFamily::histogram) l["depth"] = c.ladder.depth;
  else if (!c.ladder.dims.empty()) l["dims"] = c.ladder.dims;
  else l["max_dim"] = c.ladder.max_dim;
  j["ladder"] = l;
  json e;
  e["kind"] = std::string(to_string(c.estimator));
  e["r"] = c.params.r;
  e["L"] = c.params.L;
  if (c.params.m0_dim) e["m0_dim"] = *c.params.m0_dim;
  e["universe"] = std::string(to_string(c.params.nonordered.universe));
  e["c_L"] = c.params.nonordered.c_L;
  e["n_samples"] = c.params.nonordered.n_samples;
  e["alpha"] = {{"alpha0", c.params.alpha.alpha0}, {"q", c.params.alpha.q},
                {"K", c.params.alpha.K}, {"c_L", c.params.alpha.c_L}};
  e["solver"] = {{"max_iterations", c.params.solver.max_iterations},
                 {"max_halvings", c.params.solver.max_halvings},
                 {"gradient_tol", c.params.solver.gradient_tol},
                 {"stationarity_rel", c.params.solver.stationarity_rel}};
  j["estimator"] = e;
  json s;
  s["nu"] = c.source.nu;
  s["seed"] = c.source.omega_seed;
  s["radius"] = c.source.radius;
  switch (c.source.omega) {
    case OmegaKind::critical: s["omega"] = "critical"; break;
    case OmegaKind::gaussian: s["omega"] = "gaussian"; break;
    case OmegaKind::explicit_values: s["omega"] = to_std(c.source.omega_values); break;
  }
  j["source"] = s;
  j["noise"] = {{"kind", std::string(to_string(c.noise_kind))}, {"sigma", c.sigma}};
  j["n_grid"] = c.n_grid;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["reference_n"] = c.reference_n;
  j["diagnostics"] = {{"enabled", c.diagnostics}, {"af_pairs", c.af_pairs}};
  return j.dump(2);
}

}  // namespace ipest
