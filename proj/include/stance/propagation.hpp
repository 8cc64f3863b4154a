#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <utility>
#include <variant>
#include <vector>

#include "stance/feature_matrix.hpp"
#include "stance/types.hpp"

namespace stance {

using LabelMatrix = Eigen::Matrix<double, Eigen::Dynamic, kNumClasses>;

// Square n x n operator stored either dense or compressed sparse.
class GraphMatrix {
 public:
  GraphMatrix() = default;
  explicit GraphMatrix(DenseMatrix dense);
  explicit GraphMatrix(SparseMatrix sparse);

  Index size() const noexcept;
  bool is_sparse() const noexcept {
    return std::holds_alternative<SparseMatrix>(storage_);
  }
  const DenseMatrix& dense() const { return std::get<DenseMatrix>(storage_); }
  const SparseMatrix& sparse() const {
    return std::get<SparseMatrix>(storage_);
  }

  double at(Index i, Index j) const;
  Eigen::VectorXd row_sums() const;
  Eigen::VectorXd diagonal() const;
  LabelMatrix multiply(const LabelMatrix& y) const;
  DenseMatrix to_dense() const;

  // Returns diag(left) * M * diag(right).
  GraphMatrix scaled(const Eigen::VectorXd& left,
                     const Eigen::VectorXd& right) const;
  GraphMatrix without_diagonal() const;

  // Calls fn(i, j, w) for every stored entry with w != 0.
  template <typename Fn>
  void for_each_nonzero(Fn&& fn) const {
    if (is_sparse()) {
      const auto& m = sparse();
      for (Index i = 0; i < m.outerSize(); ++i) {
        for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
          if (it.value() != 0.0) fn(i, it.col(), it.value());
        }
      }
    } else {
      const auto& m = dense();
      for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
          if (m(i, j) != 0.0) fn(i, j, m(i, j));
        }
      }
    }
  }

 private:
  std::variant<DenseMatrix, SparseMatrix> storage_;
};

enum class KernelKind { rbf, knn };

std::string_view to_string(KernelKind kind) noexcept;
KernelKind parse_kernel(std::string_view name);

// Symmetric non-negative message similarity graph.
class AffinityMatrix {
 public:
  AffinityMatrix() = default;

  // Wraps caller-supplied weights after checking shape, symmetry and sign.
  static AffinityMatrix from_weights(GraphMatrix weights, KernelKind kind,
                                     double parameter);

  Index size() const noexcept { return weights_.size(); }
  const GraphMatrix& weights() const noexcept { return weights_; }
  KernelKind kernel() const noexcept { return kind_; }
  double parameter() const noexcept { return parameter_; }
  double at(Index i, Index j) const { return weights_.at(i, j); }

  // Same graph with W_ii forced to zero (the Label Spreading input).
  AffinityMatrix zero_diagonal() const;

 private:
  AffinityMatrix(GraphMatrix weights, KernelKind kind, double parameter)
      : weights_(std::move(weights)), kind_(kind), parameter_(parameter) {}
  friend AffinityMatrix build_rbf_affinity(const FeatureMatrix&, double);
  friend AffinityMatrix build_knn_affinity(const FeatureMatrix&, int);

  GraphMatrix weights_;
  KernelKind kind_ = KernelKind::rbf;
  double parameter_ = 0.0;
};

struct DegreeMatrix {
  Eigen::VectorXd degrees;
};

// Per-message class probabilities plus the mask of seed rows.
struct LabelDistribution {
  LabelMatrix probs;
  std::vector<bool> labeled;

  Index size() const noexcept { return probs.rows(); }
  Index labeled_count() const noexcept;

  // One-hot rows for the seeds, zero rows elsewhere.
  static LabelDistribution from_seeds(
      Index n, const std::vector<std::pair<Index, Stance>>& seeds);
};

enum class Algorithm { label_propagation, label_spreading };

std::string_view to_string(Algorithm algorithm) noexcept;
Algorithm parse_algorithm(std::string_view name);

struct PropagationConfig {
  Algorithm algorithm = Algorithm::label_spreading;
  double alpha = 1.0;
  double tol = 1e-3;
  int max_iter = 1000;

  void validate() const;
};

struct PropagationResult {
  LabelDistribution distribution;
  int iterations = 0;
  bool converged = false;
  // Unlabeled rows with no graph evidence (zero off-diagonal degree).
  std::vector<bool> isolated;
};

struct ClassAssignment {
  std::vector<Stance> classes;
  // Rows with no positive probability; they are assigned neutral.
  std::vector<bool> unresolvable;
};

// Off-diagonal similarities below this count as "no edge" when deciding
// whether a node is isolated.
inline constexpr double kIsolationThreshold = 1e-12;

// W_ij = exp(-|x_i - x_j|^2 / (2 sigma^2)), fully connected, W_ii = 1.
AffinityMatrix build_rbf_affinity(const FeatureMatrix& x, double sigma);

// 0/1 graph: edge (i, j) iff j is among i's k nearest neighbours or i is
// among j's. Distance ties are broken by the lower row index.
AffinityMatrix build_knn_affinity(const FeatureMatrix& x, int k);

DegreeMatrix degree_matrix(const AffinityMatrix& w);

// D^{-1/2} W D^{-1/2}. W must have a zero diagonal and no zero degree.
GraphMatrix normalized_laplacian(const AffinityMatrix& w);

PropagationResult run_propagation(const AffinityMatrix& w,
                                  const LabelDistribution& seeds,
                                  const PropagationConfig& cfg);

// Row argmax. Ties: neutral if it is among the maxima, otherwise the
// smallest class value.
ClassAssignment assign_classes(const LabelDistribution& dist);
Stance argmax_stance(const Eigen::Ref<const Eigen::RowVector3d>& row);

// sum_{seeds} |y^_i - y_i|^2 + 1/2 sum_{i,j} W_ij |y^_i - y^_j|^2
double propagation_cost(const AffinityMatrix& w, const LabelDistribution& seeds,
                        const LabelDistribution& result);

}  // namespace stance
