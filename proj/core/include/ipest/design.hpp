#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ipest {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Fixed observation design t_1 < ... < t_n.
class DesignGrid {
 public:
  explicit DesignGrid(std::vector<double> points);

  /// t_i = i/n, i = 1..n.
  static DesignGrid uniform(std::size_t n);

  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  std::span<const double> points() const { return points_; }
  Eigen::Map<const Vector> as_vector() const {
    return {points_.data(), static_cast<Eigen::Index>(points_.size())};
  }

  bool operator==(const DesignGrid&) const = default;

 private:
  std::vector<double> points_;
};

/// Noisy samples y(t_i) = F(x_0)(t_i) + eps_i with known noise level.
class ObservationSet {
 public:
  ObservationSet(DesignGrid grid, Vector values, double sigma);

  const DesignGrid& grid() const { return grid_; }
  const Vector& values() const { return values_; }
  double sigma() const { return sigma_; }
  std::size_t size() const { return grid_.size(); }

 private:
  DesignGrid grid_;
  Vector values_;
  double sigma_;
};

/// sqrt((1/n) sum v_i^2)
double empirical_norm(const Eigen::Ref<const Vector>& v, const DesignGrid& grid);

/// (1/n) sum u_i v_i
double empirical_inner(const Eigen::Ref<const Vector>& u,
                       const Eigen::Ref<const Vector>& v, const DesignGrid& grid);

}  // namespace ipest
