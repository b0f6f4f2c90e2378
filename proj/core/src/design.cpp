#include "ipest/design.hpp"

#include <cmath>
#include <string>

#include "ipest/errors.hpp"

namespace ipest {

DesignGrid::DesignGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw DomainError("design grid needs at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i]))
      throw DomainError("design point " + std::to_string(i) + " is not finite");
    if (i > 0 && !(points_[i] > points_[i - 1]))
      throw DomainError("design points must be strictly increasing (index " +
                        std::to_string(i) + ")");
  }
}

DesignGrid DesignGrid::uniform(std::size_t n) {
  if (n == 0) throw DomainError("uniform grid needs n >= 1");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i)
    t[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  return DesignGrid(std::move(t));
}

ObservationSet::ObservationSet(DesignGrid grid, Vector values, double sigma)
    : grid_(std::move(grid)), values_(std::move(values)), sigma_(sigma) {
  if (static_cast<std::size_t>(values_.size()) != grid_.size())
    throw DimensionError("observation values have length " + std::to_string(values_.size()) +
                         " but the grid has " + std::to_string(grid_.size()) + " points");
  if (!(sigma_ >= 0.0)) throw DomainError("noise level sigma must be nonnegative");
}

namespace {
void check_length(Eigen::Index len, const DesignGrid& grid, const char* what) {
  if (static_cast<std::size_t>(len) != grid.size())
    throw DimensionError(std::string(what) + ": vector length " + std::to_string(len) +
                         " does not match grid size " + std::to_string(grid.size()));
}
}  // namespace

double empirical_norm(const Eigen::Ref<const Vector>& v, const DesignGrid& grid) {
  check_length(v.size(), grid, "empirical_norm");
  return std::sqrt(v.squaredNorm() / static_cast<double>(grid.size()));
}

double empirical_inner(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v,
                       const DesignGrid& grid) {
  check_length(u.size(), grid, "empirical_inner");
  check_length(v.size(), grid, "empirical_inner");
  return u.dot(v) / static_cast<double>(grid.size());
}

}  // namespace ipest
