#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include "ipest/design.hpp"

namespace ipest {

/// Engine used for every stochastic computation. Instantiate one per caller.
using Rng = std::mt19937_64;

enum class NoiseKind { gaussian, bounded_uniform };

NoiseKind parse_noise_kind(std::string_view name);
std::string_view to_string(NoiseKind kind);

/// Centred noise with E eps^2 = sigma^2. Both kinds satisfy the Bernstein
/// moment condition E|eps/sigma|^k <= k!/2.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

/// n iid draws; a pure function of (spec, n).
Vector sample_noise(const NoiseSpec& spec, std::size_t n);

/// Fill `out` with iid draws from `rng`.
void fill_noise(NoiseKind kind, double sigma, Rng& rng, Eigen::Ref<Vector> out);

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Stream seed for a position in a stochastic computation, e.g.
/// derive_seed(master, {n, replicate}). Independent of execution order.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

}  // namespace ipest
