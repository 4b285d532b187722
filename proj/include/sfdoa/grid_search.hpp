#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "sfdoa/sphharm.hpp"

namespace sfdoa {

enum class SearchMode {
  Exhaustive,    // score every fine-grid direction
  Hierarchical,  // coarse-to-fine over nested Fibonacci grids
};

/// Precomputed conjugated steering vectors y*(Theta) over a direction grid,
/// plus a coarse-to-fine pyramid for fast argmax searches.
///
/// Scores are smooth functions of order <= 2N on the sphere, so their lobes
/// are tens of degrees wide. The hierarchical search scores the coarsest
/// level completely, keeps the best few candidates, and only scores the
/// finer-level neighbours of those candidates. The returned index always
/// refers to the fine grid.
class SteeringSearch {
 public:
  SteeringSearch(DirectionGrid fine, int order, SearchMode mode = SearchMode::Hierarchical);

  const DirectionGrid& grid() const { return levels_.front().grid; }
  int order() const { return order_; }
  SearchMode mode() const { return mode_; }
  std::size_t level_count() const { return levels_.size(); }

  /// conj(y(Theta_g)) for fine-grid direction g, as a column.
  auto steering(std::size_t g) const { return levels_.front().conj_steering.col(static_cast<Eigen::Index>(g)); }

  struct Result {
    std::size_t index = 0;  // fine-grid index
    double score = -std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
  };

  /// Maximizes `score` over the fine grid. `score(cols)` receives a
  /// (N+1)^2 x k matrix of conjugated steering vectors and returns k scores.
  /// Ties go to the lowest fine-grid index among the evaluated points.
  template <class Scorer>
  Result maximize(Scorer&& score) const;

 private:
  struct Level {
    DirectionGrid grid;
    CMatrix conj_steering;                            // (N+1)^2 x size
    std::vector<std::vector<std::uint32_t>> children;  // indices into the next finer level
  };

  static constexpr std::size_t kCandidates = 3;

  int order_;
  SearchMode mode_;
  std::vector<Level> levels_;  // levels_[0] is the fine grid
};

template <class Scorer>
SteeringSearch::Result SteeringSearch::maximize(Scorer&& score) const {
  Result best;
  const std::size_t top = levels_.size() - 1;
  const Level& coarsest = levels_[top];
  Eigen::VectorXd s = score(coarsest.conj_steering);
  best.evaluated = static_cast<std::size_t>(s.size());

  auto pick = [](const Eigen::VectorXd& scores, const std::vector<std::uint32_t>* ids,
                 std::size_t k) {
    // Best k entries by score (descending), ties resolved by lower index.
    std::vector<std::pair<double, std::uint32_t>> ranked;
    ranked.reserve(static_cast<std::size_t>(scores.size()));
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      const std::uint32_t id = ids ? (*ids)[static_cast<std::size_t>(i)] : static_cast<std::uint32_t>(i);
      ranked.emplace_back(scores(i), id);
    }
    k = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    ranked.resize(k);
    return ranked;
  };

  if (top == 0) {
    auto r = pick(s, nullptr, 1);
    best.index = r.front().second;
    best.score = r.front().first;
    return best;
  }

  auto current = pick(s, nullptr, kCandidates);
  std::vector<std::uint32_t> ids;
  CMatrix cols;
  for (std::size_t lvl = top; lvl > 0; --lvl) {
    const Level& here = levels_[lvl];
    const Level& finer = levels_[lvl - 1];
    ids.clear();
    for (const auto& [sc, id] : current) {
      const auto& ch = here.children[id];
      ids.insert(ids.end(), ch.begin(), ch.end());
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    cols.resize(finer.conj_steering.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j)
      cols.col(static_cast<Eigen::Index>(j)) = finer.conj_steering.col(ids[j]);
    s = score(cols);
    best.evaluated += ids.size();
    current = pick(s, &ids, lvl == 1 ? 1 : kCandidates);
  }
  best.index = current.front().second;
  best.score = current.front().first;
  return best;
}

}  // namespace sfdoa
