#pragma once

#include <string>
#include <vector>

#include "stance/feature_matrix.hpp"
#include "stance/types.hpp"

namespace stance {

// Tuned global optimum, used whenever the heuristic is undefined.
inline constexpr double kDefaultSigma = 0.85;

struct LabeledPointSet {
  FeatureMatrix vectors;       // l x m
  std::vector<Stance> classes;  // length l
};

struct SigmaEstimate {
  double sigma = kDefaultSigma;
  bool fallback = false;
  std::string warning;
  // Length of the shortest MST edge joining two different classes.
  double boundary_distance = 0.0;
};

struct MstEdge {
  Index a = 0;
  Index b = 0;
  double length = 0.0;
};

// Euclidean minimum spanning tree over the rows of x (Prim, O(l^2)).
std::vector<MstEdge> euclidean_mst(const FeatureMatrix& x);

// sigma = (shortest inter-class MST edge) / 3. Falls back to
// kDefaultSigma when all points share a class or that edge has length 0.
SigmaEstimate heuristic_sigma(const LabeledPointSet& pts);

}  // namespace stance
