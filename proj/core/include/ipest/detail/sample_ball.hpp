#pragma once

#include <cmath>
#include <random>

namespace ipest {

template <class Urbg>
Vector sample_in_ball(const Vector& center, double r, Urbg& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector dir(center.size());
  double nrm = 0.0;
  do {
    for (Eigen::Index j = 0; j < dir.size(); ++j) dir[j] = gauss(rng);
    nrm = dir.norm();
  } while (nrm == 0.0);
  const double radius = r * std::pow(unif(rng), 1.0 / static_cast<double>(center.size()));
  return center + dir * (radius / nrm);
}

}  // namespace ipest
