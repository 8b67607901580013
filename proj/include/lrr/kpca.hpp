#pragma once

#include <optional>

#include "lrr/dataset.hpp"
#include "lrr/kernel.hpp"

namespace lrr {

struct CenteredGram {
  Matrix matrix;    // K - 1K - K1 + 1K1
  Vector row_means;  // mean of each row of K
  double total_mean = 0.0;
};

CenteredGram center_gram(const Eigen::Ref<const Matrix>& k);

/// Kernel ridge regression from reduced coordinates back to states:
///   state(y) = intercept + dual_weights^T k(training_reduced, y)
/// where (K + ridge I) dual_weights = (Z - intercept)^T. The intercept is the
/// training state mean, so a very large ridge degrades toward the mean state.
struct KernelRidgeModel {
  KernelFunction kernel;
  double ridge = 1.0;
  Matrix dual_weights;      // kappa x N
  Matrix training_reduced;  // kappa x r
  Vector intercept;         // N
};

/// `inputs` are r x kappa (columns are samples), `targets` N x kappa.
KernelRidgeModel fit_kernel_ridge(const KernelFunction& kernel, const Eigen::Ref<const Matrix>& inputs,
                                  const Eigen::Ref<const Matrix>& targets, double ridge);
Matrix predict_kernel_ridge(const KernelRidgeModel& model, const Eigen::Ref<const Matrix>& inputs);

struct KpcaModel {
  KernelFunction kernel;
  Matrix training_states;  // N x kappa
  Matrix alphas;           // kappa x r, eigenvalue_l * |alpha_l|^2 = 1
  Vector eigenvalues;      // top r eigenvalues of the centered Gram, nonincreasing
  Vector gram_row_means;   // kappa
  double gram_total_mean = 0.0;
  KernelRidgeModel preimage;

  Index n() const { return training_states.rows(); }
  Index kappa() const { return training_states.cols(); }
  Index r() const { return alphas.cols(); }
};

struct KpcaOptions {
  Index r = 10;
  KernelFunction kernel = KernelFunction::polynomial(1e-10, 452.0, 6);
  double ridge = 1e9;
  /// Kernel for the preimage regression in reduced space; defaults to `kernel`.
  std::optional<KernelFunction> preimage_kernel;
};

KpcaModel kpca_fit(const Eigen::Ref<const Matrix>& states, const KpcaOptions& options);
KpcaModel kpca_fit(const SnapshotMatrix& m, const KpcaOptions& options);

/// Reduced coordinates of the columns of `z` (r x columns).
Matrix kpca_reduce(const KpcaModel& model, const Eigen::Ref<const Matrix>& z);
Matrix kpca_reconstruct(const KpcaModel& model, const Eigen::Ref<const Matrix>& zbar);

/// Reduced coordinates of the training columns straight from the centered Gram.
Matrix kpca_training_reduced(const KpcaModel& model);

}  // namespace lrr
