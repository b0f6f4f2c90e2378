#include "ipest/noise.hpp"

#include <cmath>
#include <string>

#include "ipest/errors.hpp"

namespace ipest {

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "bounded-uniform" || name == "bounded_uniform") return NoiseKind::bounded_uniform;
  throw ConfigError("unknown noise kind '" + std::string(name) + "'");
}

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::bounded_uniform: return "bounded-uniform";
  }
  return "unknown";
}

void fill_noise(NoiseKind kind, double sigma, Rng& rng, Eigen::Ref<Vector> out) {
  if (sigma == 0.0) {
    out.setZero();
    return;
  }
  if (kind == NoiseKind::gaussian) {
    std::normal_distribution<double> dist(0.0, sigma);
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = dist(rng);
  } else {
    // U(-a, a) has variance a^2/3.
    const double half_width = std::sqrt(3.0) * sigma;
    std::uniform_real_distribution<double> dist(-half_width, half_width);
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = dist(rng);
  }
}

Vector sample_noise(const NoiseSpec& spec, std::size_t n) {
  if (!(spec.sigma >= 0.0)) throw DomainError("noise sigma must be nonnegative");
  Vector out(static_cast<Eigen::Index>(n));
  Rng rng(spec.seed);
  fill_noise(spec.kind, spec.sigma, rng, out);
  return out;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace ipest
