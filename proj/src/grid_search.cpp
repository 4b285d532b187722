#include "sfdoa/grid_search.hpp"

#include <algorithm>
#include <cmath>

#include "sfdoa/errors.hpp"

namespace sfdoa {

namespace {

constexpr double kLevelFactor = 3.0;
constexpr double kCoarsestDeg = 8.0;
// Children radius in units of the parent level spacing; the covering radius
// of a Fibonacci grid is about 0.62 of its nominal spacing.
constexpr double kChildRadius = 1.0;

CMatrix conj_steering_matrix(const DirectionGrid& g, int order) {
  return sh_matrix(g.directions(), order).adjoint();
}

}  // namespace

SteeringSearch::SteeringSearch(DirectionGrid fine, int order, SearchMode mode)
    : order_(order), mode_(mode) {
  if (fine.size() == 0) throw ArgumentError("steering search over empty grid");
  if (order < 0) throw ArgumentError("negative order");
  Level base;
  base.conj_steering = conj_steering_matrix(fine, order);
  base.grid = std::move(fine);
  levels_.push_back(std::move(base));
  if (mode_ == SearchMode::Exhaustive) return;

  double res = levels_.front().grid.resolution_deg();
  while (res * kLevelFactor <= kCoarsestDeg * 1.5 && res > 0.0) {
    res *= kLevelFactor;
    const double r = res * kPi / 180.0;
    const auto count = static_cast<std::size_t>(std::llround(4.0 * kPi / (r * r)));
    if (count >= levels_.back().grid.size()) break;
    Level lvl;
    lvl.grid = fibonacci_grid(count);
    lvl.conj_steering = conj_steering_matrix(lvl.grid, order);
    const DirectionGrid& finer = levels_.back().grid;
    const double radius = kChildRadius * lvl.grid.resolution_deg() * kPi / 180.0;
    lvl.children.resize(lvl.grid.size());
    for (std::size_t i = 0; i < lvl.grid.size(); ++i) {
      const Eigen::Vector3d u = lvl.grid.unit_vectors().col(static_cast<Eigen::Index>(i));
      for (std::size_t c : finer.within(u, radius)) lvl.children[i].push_back(static_cast<std::uint32_t>(c));
      if (lvl.children[i].empty())
        lvl.children[i].push_back(static_cast<std::uint32_t>(finer.nearest(lvl.grid[i])));
    }
    levels_.push_back(std::move(lvl));
  }
}

}  // namespace sfdoa
