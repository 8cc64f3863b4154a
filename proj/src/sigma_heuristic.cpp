#include "stance/sigma_heuristic.hpp"

#include <cmath>
#include <limits>

namespace stance {

std::vector<MstEdge> euclidean_mst(const FeatureMatrix& x) {
  const Index n = x.rows();
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  std::vector<double> best(static_cast<std::size_t>(n), inf);
  std::vector<Index> parent(static_cast<std::size_t>(n), -1);
  best[0] = 0.0;
  for (Index step = 0; step < n; ++step) {
    Index u = -1;
    for (Index v = 0; v < n; ++v) {
      if (!in_tree[v] && (u < 0 || best[v] < best[u])) u = v;
    }
    in_tree[u] = true;
    if (parent[u] >= 0) edges.push_back({parent[u], u, std::sqrt(best[u])});
    for (Index v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double d = x.squared_distance(u, v);
      if (d < best[v]) {
        best[v] = d;
        parent[v] = u;
      }
    }
  }
  return edges;
}

SigmaEstimate heuristic_sigma(const LabeledPointSet& pts) {
  const Index l = pts.vectors.rows();
  if (l != static_cast<Index>(pts.classes.size()))
    throw ParameterError("labeled point set: vector and class counts differ");
  if (l < 2) throw ParameterError("sigma heuristic needs at least two points");
  if (!pts.vectors.all_finite())
    throw DataError("labeled point set contains non-finite values");

  SigmaEstimate est;
  double shortest = std::numeric_limits<double>::infinity();
  for (const auto& e : euclidean_mst(pts.vectors)) {
    if (pts.classes[static_cast<std::size_t>(e.a)] !=
        pts.classes[static_cast<std::size_t>(e.b)])
      shortest = std::min(shortest, e.length);
  }
  if (!std::isfinite(shortest)) {
    est.fallback = true;
    est.warning = "all labeled messages share one class; using sigma = 0.85";
    return est;
  }
  est.boundary_distance = shortest;
  if (!(shortest > 0.0)) {
    est.fallback = true;
    est.warning =
        "differently labeled messages coincide in feature space; using "
        "sigma = 0.85";
    return est;
  }
  est.sigma = shortest / 3.0;
  return est;
}

}  // namespace stance
