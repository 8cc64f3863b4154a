#include "stance/feature_matrix.hpp"

#include <cmath>
#include <utility>

namespace stance {

FeatureMatrix::FeatureMatrix(SparseMatrix values, FeatureSpace space,
                             std::vector<std::string> vocabulary)
    : values_(std::move(values)),
      space_(space),
      vocabulary_(std::move(vocabulary)) {
  values_.makeCompressed();
}

FeatureMatrix FeatureMatrix::from_dense(const DenseMatrix& values,
                                        FeatureSpace space) {
  // Exact zeros are dropped; NaN and inf survive for later validation.
  SparseMatrix sparse = values.sparseView(0.0, 0.0);
  return FeatureMatrix(std::move(sparse), space);
}

double FeatureMatrix::squared_distance(Index i, Index j) const {
  SparseMatrix::InnerIterator a(values_, i);
  SparseMatrix::InnerIterator b(values_, j);
  double sum = 0.0;
  while (a && b) {
    if (a.col() == b.col()) {
      const double d = a.value() - b.value();
      sum += d * d;
      ++a;
      ++b;
    } else if (a.col() < b.col()) {
      sum += a.value() * a.value();
      ++a;
    } else {
      sum += b.value() * b.value();
      ++b;
    }
  }
  for (; a; ++a) sum += a.value() * a.value();
  for (; b; ++b) sum += b.value() * b.value();
  return sum;
}

bool FeatureMatrix::row_is_zero(Index i) const {
  for (SparseMatrix::InnerIterator it(values_, i); it; ++it) {
    if (it.value() != 0.0) return false;
  }
  return true;
}

bool FeatureMatrix::all_finite() const {
  const double* v = values_.valuePtr();
  for (Index k = 0; k < values_.nonZeros(); ++k) {
    if (!std::isfinite(v[k])) return false;
  }
  return true;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const Index> rows) const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (SparseMatrix::InnerIterator it(values_, rows[r]); it; ++it) {
      triplets.emplace_back(static_cast<Index>(r), it.col(), it.value());
    }
  }
  SparseMatrix out(static_cast<Index>(rows.size()), values_.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return FeatureMatrix(std::move(out), space_, vocabulary_);
}

DenseMatrix pairwise_squared_distances(const FeatureMatrix& x) {
  const Index n = x.rows();
  DenseMatrix d = DenseMatrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double v = x.squared_distance(i, j);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

}  // namespace stance
