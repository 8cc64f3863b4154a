#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stance/types.hpp"

namespace stance {

using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

enum class FeatureSpace { brown, ling, ngrams, brown_ling };

std::string_view to_string(FeatureSpace space) noexcept;
FeatureSpace parse_feature_space(std::string_view name);

// n x m message feature vectors. Storage is always compressed row-major
// sparse: Brown and n-gram count vectors are overwhelmingly zero, and
// the dense linguistic block is small enough that it does not matter.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(SparseMatrix values, FeatureSpace space,
                std::vector<std::string> vocabulary = {});

  static FeatureMatrix from_dense(const DenseMatrix& values,
                                  FeatureSpace space = FeatureSpace::brown);

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  FeatureSpace space() const noexcept { return space_; }
  const SparseMatrix& values() const noexcept { return values_; }

  // N-gram vocabulary in column order (empty for the fixed spaces).
  const std::vector<std::string>& vocabulary() const noexcept {
    return vocabulary_;
  }

  double squared_distance(Index i, Index j) const;
  bool row_is_zero(Index i) const;
  bool all_finite() const;

  FeatureMatrix select_rows(std::span<const Index> rows) const;
  DenseMatrix to_dense() const { return DenseMatrix(values_); }

 private:
  SparseMatrix values_;
  FeatureSpace space_ = FeatureSpace::brown;
  std::vector<std::string> vocabulary_;
};

// Symmetric n x n matrix of squared Euclidean distances between rows.
DenseMatrix pairwise_squared_distances(const FeatureMatrix& x);

}  // namespace stance
