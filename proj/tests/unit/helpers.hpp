#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "stance/features.hpp"
#include "stance/ingest.hpp"
#include "stance/propagation.hpp"

namespace testing {

using namespace stance;

// Random symmetric weight matrix with zero diagonal. Edges are kept with
// probability `density`; a random spanning path keeps it connected.
inline DenseMatrix random_connected_weights(std::mt19937& rng, Index n, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DenseMatrix w = DenseMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (u(rng) < density) w(i, j) = w(j, i) = 0.05 + u(rng);
    }
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t k = 1; k < perm.size(); ++k) {
    const Index a = perm[k - 1];
    const Index b = perm[k];
    if (w(a, b) == 0.0) w(a, b) = w(b, a) = 0.05 + u(rng);
  }
  return w;
}

// Seeds l distinct rows, cycling through classes so at least two appear
// whenever l >= 2.
inline std::vector<std::pair<Index, Stance>> random_seeds(std::mt19937& rng, Index n, Index l) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  std::shuffle(rows.begin(), rows.end(), rng);
  std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
  const int offset = cls(rng);
  std::vector<std::pair<Index, Stance>> seeds;
  for (Index k = 0; k < l; ++k) {
    seeds.emplace_back(rows[static_cast<std::size_t>(k)],
                       stance_of_column(static_cast<int>((k + offset) % kNumClasses)));
  }
  return seeds;
}

// y_U = (I - P_UU)^{-1} P_UL y_L with P = D^{-1} W.
inline LabelMatrix harmonic_solution(const DenseMatrix& w, const LabelDistribution& seeds) {
  const Index n = w.rows();
  const Eigen::VectorXd deg = w.rowwise().sum();
  const DenseMatrix p = deg.cwiseInverse().asDiagonal() * w;
  std::vector<Index> lab;
  std::vector<Index> unl;
  for (Index i = 0; i < n; ++i) (seeds.labeled[static_cast<std::size_t>(i)] ? lab : unl).push_back(i);
  const Index u = static_cast<Index>(unl.size());
  const Index l = static_cast<Index>(lab.size());
  DenseMatrix puu(u, u);
  DenseMatrix pul(u, l);
  LabelMatrix yl(l, kNumClasses);
  for (Index a = 0; a < u; ++a) {
    for (Index b = 0; b < u; ++b) puu(a, b) = p(unl[a], unl[b]);
    for (Index b = 0; b < l; ++b) pul(a, b) = p(unl[a], lab[b]);
  }
  for (Index b = 0; b < l; ++b) yl.row(b) = seeds.probs.row(lab[b]);
  const DenseMatrix yu = (DenseMatrix::Identity(u, u) - puu).lu().solve(pul * yl);
  LabelMatrix out = seeds.probs;
  for (Index a = 0; a < u; ++a) out.row(unl[a]) = yu.row(a);
  return out;
}

inline AffinityMatrix affinity(const DenseMatrix& w) {
  return AffinityMatrix::from_weights(GraphMatrix(w), KernelKind::rbf, 1.0);
}

// Synthetic Brown cluster map: word "w<i>" belongs to cluster i % clusters,
// bitstrings are distinct binary numbers.
inline BrownClusterMap synthetic_clusters(int words, int clusters) {
  std::vector<std::pair<std::string, std::string>> entries;
  for (int i = 0; i < words; ++i) {
    int c = i % clusters;
    std::string bits = "1";
    for (int b = 10; b >= 0; --b) bits.push_back((c >> b) & 1 ? '1' : '0');
    entries.emplace_back(bits, "w" + std::to_string(i));
  }
  return BrownClusterMap::from_entries(entries);
}

inline Message make_message(const std::string& id, long long seconds, const std::string& text,
                            std::optional<Stance> gold = std::nullopt) {
  Message m;
  m.id = id;
  m.timestamp = Timestamp(std::chrono::seconds(seconds));
  m.text = text;
  m.language = "en";
  m.gold_stance = gold;
  return m;
}

}  // namespace testing
