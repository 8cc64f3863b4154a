#include "stance/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace stance {

// ---------------------------------------------------------------------------
// GraphMatrix

GraphMatrix::GraphMatrix(DenseMatrix dense) : storage_(std::move(dense)) {}

GraphMatrix::GraphMatrix(SparseMatrix sparse) : storage_(std::move(sparse)) {
  std::get<SparseMatrix>(storage_).makeCompressed();
}

Index GraphMatrix::size() const noexcept {
  return std::visit([](const auto& m) { return m.rows(); }, storage_);
}

double GraphMatrix::at(Index i, Index j) const {
  if (is_sparse()) return sparse().coeff(i, j);
  return dense()(i, j);
}

Eigen::VectorXd GraphMatrix::row_sums() const {
  if (is_sparse()) {
    const auto& m = sparse();
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(m.rows());
    for (Index i = 0; i < m.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(m, i); it; ++it) sums[i] += it.value();
    }
    return sums;
  }
  return dense().rowwise().sum();
}

Eigen::VectorXd GraphMatrix::diagonal() const {
  if (is_sparse()) return Eigen::VectorXd(sparse().diagonal());
  return dense().diagonal();
}

LabelMatrix GraphMatrix::multiply(const LabelMatrix& y) const {
  return std::visit([&](const auto& m) -> LabelMatrix { return m * y; },
                    storage_);
}

DenseMatrix GraphMatrix::to_dense() const {
  if (is_sparse()) return DenseMatrix(sparse());
  return dense();
}

GraphMatrix GraphMatrix::scaled(const Eigen::VectorXd& left,
                                const Eigen::VectorXd& right) const {
  if (is_sparse()) {
    SparseMatrix m = sparse();
    for (Index i = 0; i < m.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
        it.valueRef() *= left[i] * right[it.col()];
      }
    }
    return GraphMatrix(std::move(m));
  }
  return GraphMatrix(
      DenseMatrix(left.asDiagonal() * dense() * right.asDiagonal()));
}

GraphMatrix GraphMatrix::without_diagonal() const {
  if (is_sparse()) {
    SparseMatrix m = sparse();
    m.prune([](Index i, Index j, double) { return i != j; });
    return GraphMatrix(std::move(m));
  }
  DenseMatrix m = dense();
  m.diagonal().setZero();
  return GraphMatrix(std::move(m));
}

// ---------------------------------------------------------------------------
// AffinityMatrix

AffinityMatrix AffinityMatrix::from_weights(GraphMatrix weights,
                                            KernelKind kind,
                                            double parameter) {
  const Index n = weights.size();
  if (!weights.is_sparse() && weights.dense().cols() != n)
    throw ParameterError("affinity matrix must be square");
  if (weights.is_sparse() && weights.sparse().cols() != n)
    throw ParameterError("affinity matrix must be square");
  weights.for_each_nonzero([&](Index i, Index j, double w) {
    if (!std::isfinite(w) || w < 0.0)
      throw DataError("affinity weight (" + std::to_string(i) + ", " +
                      std::to_string(j) + ") is negative or non-finite");
    const double mirror = weights.at(j, i);
    if (std::abs(mirror - w) > 1e-12 * std::max(1.0, std::abs(w)))
      throw DataError("affinity matrix is not symmetric at (" +
                      std::to_string(i) + ", " + std::to_string(j) + ")");
  });
  return AffinityMatrix(std::move(weights), kind, parameter);
}

AffinityMatrix AffinityMatrix::zero_diagonal() const {
  return AffinityMatrix(weights_.without_diagonal(), kind_, parameter_);
}

Index LabelDistribution::labeled_count() const noexcept {
  return static_cast<Index>(std::count(labeled.begin(), labeled.end(), true));
}

LabelDistribution LabelDistribution::from_seeds(
    Index n, const std::vector<std::pair<Index, Stance>>& seeds) {
  LabelDistribution d;
  d.probs = LabelMatrix::Zero(n, kNumClasses);
  d.labeled.assign(static_cast<std::size_t>(n), false);
  for (const auto& [row, stance] : seeds) {
    if (row < 0 || row >= n)
      throw SeedingError("seed row " + std::to_string(row) + " out of range");
    d.probs.row(row).setZero();
    d.probs(row, column_of(stance)) = 1.0;
    d.labeled[static_cast<std::size_t>(row)] = true;
  }
  return d;
}

void PropagationConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ParameterError("alpha must lie in [0, 1]");
  if (!(tol > 0.0)) throw ParameterError("tol must be positive");
  if (max_iter < 1) throw ParameterError("max_iter must be at least 1");
}

// ---------------------------------------------------------------------------
// Graph construction

namespace {

void check_features(const FeatureMatrix& x) {
  if (x.rows() < 1) throw ParameterError("feature matrix has no rows");
  if (!x.all_finite())
    throw DataError("feature matrix contains non-finite values");
}

}  // namespace

AffinityMatrix build_rbf_affinity(const FeatureMatrix& x, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ParameterError("rbf sigma must be a positive finite number");
  check_features(x);
  DenseMatrix w = pairwise_squared_distances(x);
  const double scale = -1.0 / (2.0 * sigma * sigma);
  w = (w.array() * scale).exp().matrix();
  w.diagonal().setOnes();
  return AffinityMatrix(GraphMatrix(std::move(w)), KernelKind::rbf, sigma);
}

AffinityMatrix build_knn_affinity(const FeatureMatrix& x, int k) {
  check_features(x);
  const Index n = x.rows();
  if (k < 1 || k >= n)
    throw ParameterError("knn requires 1 <= k < n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(n) + ")");
  const DenseMatrix d = pairwise_squared_distances(x);

  std::vector<Eigen::Triplet<double>> edges;
  edges.reserve(static_cast<std::size_t>(2 * n * k));
  std::vector<Index> order(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t p = 0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) order[p++] = j;
    }
    auto closer = [&](Index a, Index b) {
      return d(i, a) < d(i, b) || (d(i, a) == d(i, b) && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), closer);
    for (int r = 0; r < k; ++r) {
      edges.emplace_back(i, order[r], 1.0);
      edges.emplace_back(order[r], i, 1.0);
    }
  }
  SparseMatrix w(n, n);
  // Duplicates from mutual selection collapse to a single unit edge.
  w.setFromTriplets(edges.begin(), edges.end(),
                    [](double, double) { return 1.0; });
  return AffinityMatrix(GraphMatrix(std::move(w)), KernelKind::knn,
                        static_cast<double>(k));
}

DegreeMatrix degree_matrix(const AffinityMatrix& w) {
  return DegreeMatrix{w.weights().row_sums()};
}

GraphMatrix normalized_laplacian(const AffinityMatrix& w) {
  const Eigen::VectorXd diag = w.weights().diagonal();
  for (Index i = 0; i < diag.size(); ++i) {
    if (diag[i] != 0.0)
      throw ParameterError(
          "normalized laplacian requires a zero diagonal (row " +
          std::to_string(i) + ")");
  }
  const Eigen::VectorXd deg = degree_matrix(w).degrees;
  for (Index i = 0; i < deg.size(); ++i) {
    if (!(deg[i] > 0.0))
      throw IsolatedNodeError(static_cast<std::size_t>(i),
                              "node " + std::to_string(i) +
                                  " has zero degree; D^{-1/2} is undefined");
  }
  const Eigen::VectorXd inv_sqrt = deg.cwiseSqrt().cwiseInverse();
  return w.weights().scaled(inv_sqrt, inv_sqrt);
}

// ---------------------------------------------------------------------------
// Iteration

namespace {

// D^{-1} W with rows of isolated nodes zeroed.
GraphMatrix transition_operator(const GraphMatrix& w,
                                const std::vector<bool>& isolated) {
  const Eigen::VectorXd deg = w.row_sums();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(deg.size());
  for (Index i = 0; i < deg.size(); ++i) {
    if (!isolated[static_cast<std::size_t>(i)] && deg[i] > 0.0)
      inv[i] = 1.0 / deg[i];
  }
  return w.scaled(inv, Eigen::VectorXd::Ones(deg.size()));
}

// D^{-1/2} W D^{-1/2} restricted to non-isolated nodes of a zero-diagonal W.
GraphMatrix spreading_operator(const GraphMatrix& w,
                               const std::vector<bool>& isolated) {
  const Eigen::VectorXd deg = w.row_sums();
  Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(deg.size());
  for (Index i = 0; i < deg.size(); ++i) {
    if (!isolated[static_cast<std::size_t>(i)] && deg[i] > 0.0)
      inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
  }
  return w.scaled(inv_sqrt, inv_sqrt);
}

std::vector<bool> find_isolated(const GraphMatrix& offdiag) {
  const Eigen::VectorXd deg = offdiag.row_sums();
  std::vector<bool> isolated(static_cast<std::size_t>(deg.size()));
  for (Index i = 0; i < deg.size(); ++i) {
    isolated[static_cast<std::size_t>(i)] = !(deg[i] >= kIsolationThreshold);
  }
  return isolated;
}

void normalize_rows(LabelMatrix& y) {
  for (Index i = 0; i < y.rows(); ++i) {
    const double s = y.row(i).sum();
    if (s > 0.0) y.row(i) /= s;
  }
}

}  // namespace

PropagationResult run_propagation(const AffinityMatrix& w,
                                  const LabelDistribution& seeds,
                                  const PropagationConfig& cfg) {
  cfg.validate();
  const Index n = w.size();
  if (seeds.size() != n ||
      seeds.labeled.size() != static_cast<std::size_t>(n))
    throw ParameterError("seed distribution has " +
                         std::to_string(seeds.size()) + " rows, graph has " +
                         std::to_string(n));
  if (seeds.labeled_count() == 0)
    throw SeedingError("propagation needs at least one labeled message");

  const GraphMatrix offdiag = w.weights().without_diagonal();
  std::vector<bool> isolated = find_isolated(offdiag);

  const bool spreading = cfg.algorithm == Algorithm::label_spreading;
  const GraphMatrix op = spreading ? spreading_operator(offdiag, isolated)
                                   : transition_operator(w.weights(), isolated);

  const LabelMatrix& y0 = seeds.probs;
  const bool hard_clamp = cfg.alpha == 1.0;
  std::vector<Index> seed_rows;
  for (Index i = 0; i < n; ++i) {
    if (seeds.labeled[static_cast<std::size_t>(i)]) seed_rows.push_back(i);
  }

  PropagationResult result;
  LabelMatrix y = y0;
  LabelMatrix next(n, kNumClasses);
  for (int t = 1; t <= cfg.max_iter; ++t) {
    next.noalias() = op.multiply(y);
    if (spreading) {
      if (!hard_clamp) next = cfg.alpha * next + (1.0 - cfg.alpha) * y0;
    } else if (!hard_clamp) {
      // Soft clamping: seed rows mix their own label back in with weight alpha.
      for (Index i : seed_rows)
        next.row(i) = cfg.alpha * y0.row(i) + (1.0 - cfg.alpha) * next.row(i);
    }
    if (hard_clamp) {
      for (Index i : seed_rows) next.row(i) = y0.row(i);
    }
    const double delta = (next - y).cwiseAbs().maxCoeff();
    y.swap(next);
    result.iterations = t;
    if (!std::isfinite(delta))
      throw DataError("propagation diverged to non-finite values");
    if (delta < cfg.tol) {
      result.converged = true;
      break;
    }
  }

  normalize_rows(y);
  if (hard_clamp) {
    for (Index i : seed_rows) y.row(i) = y0.row(i);
  }
  for (Index i = 0; i < n; ++i) {
    if (seeds.labeled[static_cast<std::size_t>(i)])
      isolated[static_cast<std::size_t>(i)] = false;
  }
  result.distribution = LabelDistribution{std::move(y), seeds.labeled};
  result.isolated = std::move(isolated);
  return result;
}

Stance argmax_stance(const Eigen::Ref<const Eigen::RowVector3d>& row) {
  const double best = row.maxCoeff();
  if (row[column_of(Stance::neutral)] == best) return Stance::neutral;
  if (row[column_of(Stance::against)] == best) return Stance::against;
  return Stance::supporting;
}

ClassAssignment assign_classes(const LabelDistribution& dist) {
  ClassAssignment out;
  const Index n = dist.size();
  out.classes.resize(static_cast<std::size_t>(n));
  out.unresolvable.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Eigen::RowVector3d row = dist.probs.row(i);
    const bool empty = !(row.maxCoeff() > 0.0);
    out.unresolvable[static_cast<std::size_t>(i)] = empty;
    out.classes[static_cast<std::size_t>(i)] =
        empty ? Stance::neutral : argmax_stance(row);
  }
  return out;
}

double propagation_cost(const AffinityMatrix& w, const LabelDistribution& seeds,
                        const LabelDistribution& result) {
  const Index n = w.size();
  if (seeds.size() != n || result.size() != n)
    throw ParameterError("cost inputs have inconsistent sizes");
  double fit = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (seeds.labeled[static_cast<std::size_t>(i)])
      fit += (result.probs.row(i) - seeds.probs.row(i)).squaredNorm();
  }
  double smooth = 0.0;
  w.weights().for_each_nonzero([&](Index i, Index j, double wij) {
    smooth += wij * (result.probs.row(i) - result.probs.row(j)).squaredNorm();
  });
  return fit + 0.5 * smooth;
}

}  // namespace stance
