#pragma once

#include <string>
#include <vector>

#include "lrr/dataset.hpp"

namespace lrr {

/// Linear reduction onto the leading left singular vectors of the centered
/// snapshot matrix.
struct PcaModel {
  Matrix basis;            // N x r, orthonormal columns
  Vector singular_values;  // min(N, kappa), nonincreasing
  Vector mean;             // N
  std::vector<std::string> warnings;

  Index n() const { return basis.rows(); }
  Index r() const { return basis.cols(); }

  /// Eigenvalues of the sample covariance, singular_values^2 / kappa.
  Vector covariance_eigenvalues(Index kappa) const;
};

PcaModel pca_fit(const SnapshotMatrix& m, Index r);
PcaModel pca_fit(const Eigen::Ref<const Matrix>& states, Index r);

/// Coordinates V^T (z - mean). `z` may hold several states as columns.
Matrix pca_reduce(const PcaModel& model, const Eigen::Ref<const Matrix>& z);
/// mean + V zbar, column-wise.
Matrix pca_reconstruct(const PcaModel& model, const Eigen::Ref<const Matrix>& zbar);

/// singular_values / sum(singular_values).
Vector scaled_singular_values(const PcaModel& model);

/// Mean reconstruction score over the training columns for every rank 1..max_r,
/// from one fit. Entry k is the score with k+1 modes.
Vector reconstruction_score_by_rank(const Eigen::Ref<const Matrix>& states, Index max_r);

/// Smallest r whose mean training reconstruction score reaches `threshold`.
Index select_rank(const Eigen::Ref<const Matrix>& states, double threshold);

}  // namespace lrr
