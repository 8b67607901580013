#pragma once

#include <cstdint>
#include <vector>

#include "lrr/kernel.hpp"

namespace lrr {

struct GpOptions {
  bool standardize_targets = true;
  /// Jitter starts at jitter_start * mean(diag K) and grows by 10x up to jitter_cap * mean(diag K).
  double jitter_start = 1e-12;
  double jitter_cap = 1e-6;
};

/// Exact GP regression with zero prior mean on standardized targets. One
/// kernel, one Cholesky factor, r right-hand sides.
struct GpModel {
  KernelFunction kernel;
  Matrix inputs;        // kappa x p
  Matrix targets;       // kappa x r, standardized
  Vector target_mean;   // r
  Vector target_scale;  // r
  Matrix chol;          // kappa x kappa lower factor of K + jitter I
  Matrix dual;          // kappa x r
  double jitter = 0.0;

  Index kappa() const { return inputs.rows(); }
  Index p() const { return inputs.cols(); }
  Index r() const { return dual.cols(); }
};

GpModel gp_fit(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets,
               const KernelFunction& kernel, const GpOptions& options = {});

struct GpPrediction {
  Vector mean;
  Vector variance;  // per output; empty unless requested
};

GpPrediction gp_predict(const GpModel& model, const Eigen::Ref<const Vector>& mu, bool with_variance = false);

/// Row i holds the prediction for row i of `mus` (B x p); bit-identical to gp_predict.
Matrix gp_predict_batch(const GpModel& model, const Eigen::Ref<const Matrix>& mus);

struct GridSearchResult {
  KernelFunction kernel;
  double mean_score = 0.0;  // mean regression score on held-out folds
};

/// k-fold cross-validated ranking of candidate kernels, best first.
std::vector<GridSearchResult> gp_grid_search(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets,
                                             const std::vector<KernelFunction>& candidates, int folds,
                                             std::uint64_t seed, const GpOptions& options = {});

}  // namespace lrr
