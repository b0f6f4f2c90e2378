#pragma once

#include <random>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "ipest/ipest.hpp"

namespace ipest::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix A(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) A(i, j) = g(rng);
  return A;
}

inline Vector random_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline std::vector<std::size_t> iota_dims(std::size_t first, std::size_t last) {
  std::vector<std::size_t> d;
  for (std::size_t k = first; k <= last; ++k) d.push_back(k);
  return d;
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace ipest::testing

namespace doctest {
template <>
struct StringMaker<std::vector<std::size_t>> {
  static String convert(const std::vector<std::size_t>& v) {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << '}';
    return os.str().c_str();
  }
};
}  // namespace doctest
