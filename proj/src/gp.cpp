#include "lrr/gp.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "lrr/io.hpp"
#include "lrr/metrics.hpp"

namespace lrr {

namespace {

void check_unique_rows(const Eigen::Ref<const Matrix>& x) {
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return a < b;
  });
  for (std::size_t k = 1; k < order.size(); ++k)
    if ((x.row(order[k - 1]).array() == x.row(order[k]).array()).all())
      fail(ErrorKind::DuplicateParameters, "duplicate GP inputs at rows " + std::to_string(order[k - 1]) + " and " +
                                               std::to_string(order[k]) + " make the kernel matrix singular");
}

// Shared by single and batch prediction so both produce identical bits.
void predict_row(const GpModel& model, const Eigen::Ref<const Vector>& mu, Vector& kstar, Eigen::Ref<Vector> out) {
  const Index kappa = model.kappa();
  for (Index i = 0; i < kappa; ++i) kstar(i) = kernel_eval(model.kernel, model.inputs.row(i).transpose(), mu);
  for (Index l = 0; l < model.r(); ++l) {
    double acc = 0.0;
    for (Index i = 0; i < kappa; ++i) acc += kstar(i) * model.dual(i, l);
    out(l) = model.target_mean(l) + model.target_scale(l) * acc;
  }
}

}  // namespace

GpModel gp_fit(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets,
               const KernelFunction& kernel, const GpOptions& options) {
  kernel.validate();
  require(inputs.rows() >= 1, ErrorKind::InvalidArgument, "GP needs at least one training pair");
  require(inputs.rows() == targets.rows(), ErrorKind::ShapeMismatch,
          "GP inputs (" + std::to_string(inputs.rows()) + ") and targets (" + std::to_string(targets.rows()) +
              ") differ in count");
  require(inputs.allFinite() && targets.allFinite(), ErrorKind::NonFinite, "GP training data must be finite");
  check_unique_rows(inputs);

  GpModel model;
  model.kernel = kernel;
  model.inputs = inputs;
  const Index r = targets.cols();
  if (options.standardize_targets) {
    model.target_mean = targets.colwise().mean().transpose();
    model.target_scale.resize(r);
    for (Index l = 0; l < r; ++l) {
      const double sd = std::sqrt((targets.col(l).array() - model.target_mean(l)).square().mean());
      model.target_scale(l) = sd > 0.0 ? sd : 1.0;
    }
  } else {
    model.target_mean = Vector::Zero(r);
    model.target_scale = Vector::Ones(r);
  }
  model.targets = (targets.rowwise() - model.target_mean.transpose()).array().rowwise() /
                  model.target_scale.transpose().array();

  const Matrix k = gram(kernel, inputs.transpose());
  const double diag_mean = k.diagonal().mean();
  require(diag_mean > 0.0, ErrorKind::Fit, "kernel matrix has a nonpositive mean diagonal");
  const double cap = options.jitter_cap * diag_mean;
  Eigen::LLT<Matrix> llt;
  for (double jitter = options.jitter_start * diag_mean;; jitter *= 10.0) {
    jitter = std::min(jitter, cap);
    Matrix kj = k;
    kj.diagonal().array() += jitter;
    llt.compute(kj);
    if (llt.info() == Eigen::Success) {
      model.jitter = jitter;
      break;
    }
    if (jitter >= cap)
      fail(ErrorKind::Fit, "kernel matrix is not positive definite even with jitter " + io::shortest_repr(cap));
  }
  model.chol = llt.matrixL();
  model.dual = llt.solve(model.targets);
  return model;
}

GpPrediction gp_predict(const GpModel& model, const Eigen::Ref<const Vector>& mu, bool with_variance) {
  require(mu.size() == model.p(), ErrorKind::ShapeMismatch,
          "GP input has length " + std::to_string(mu.size()) + ", expected " + std::to_string(model.p()));
  GpPrediction out;
  out.mean.resize(model.r());
  Vector kstar(model.kappa());
  predict_row(model, mu, kstar, out.mean);
  if (with_variance) {
    const Vector v = model.chol.triangularView<Eigen::Lower>().solve(kstar);
    const double latent = std::max(0.0, kernel_eval(model.kernel, mu, mu) - v.squaredNorm());
    out.variance = latent * model.target_scale.array().square();
  }
  return out;
}

Matrix gp_predict_batch(const GpModel& model, const Eigen::Ref<const Matrix>& mus) {
  require(mus.cols() == model.p(), ErrorKind::ShapeMismatch,
          "GP batch inputs have " + std::to_string(mus.cols()) + " columns, expected " + std::to_string(model.p()));
  Matrix out(mus.rows(), model.r());
  Vector kstar(model.kappa());
  Vector row(model.r());
  for (Index b = 0; b < mus.rows(); ++b) {
    predict_row(model, mus.row(b).transpose(), kstar, row);
    out.row(b) = row.transpose();
  }
  return out;
}

std::vector<GridSearchResult> gp_grid_search(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets,
                                             const std::vector<KernelFunction>& candidates, int folds,
                                             std::uint64_t seed, const GpOptions& options) {
  require(folds >= 2 && folds <= inputs.rows(), ErrorKind::InvalidArgument, "folds must lie in [2, kappa]");
  require(!candidates.empty(), ErrorKind::InvalidArgument, "grid search needs candidates");
  std::vector<Index> order(static_cast<std::size_t>(inputs.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);

  std::vector<GridSearchResult> results;
  for (const auto& kernel : candidates) {
    double total = 0.0;
    Index count = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<Index> train, test;
      for (std::size_t i = 0; i < order.size(); ++i)
        (static_cast<int>(i % static_cast<std::size_t>(folds)) == f ? test : train).push_back(order[i]);
      const Matrix xtr = inputs(train, Eigen::all), ytr = targets(train, Eigen::all);
      const Matrix xte = inputs(test, Eigen::all), yte = targets(test, Eigen::all);
      double fold_score = 0.0;
      try {
        const auto model = gp_fit(xtr, ytr, kernel, options);
        const Matrix pred = gp_predict_batch(model, xte);
        for (Index i = 0; i < pred.rows(); ++i) {
          const Vector ref = yte.row(i).transpose();
          fold_score += ref.norm() > 0.0 ? score(ref, pred.row(i).transpose()) : 0.0;
        }
      } catch (const Error&) {
        fold_score = -std::numeric_limits<double>::infinity();
      }
      total += fold_score;
      count += static_cast<Index>(test.size());
    }
    results.push_back({kernel, total / static_cast<double>(count)});
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const auto& a, const auto& b) { return a.mean_score > b.mean_score; });
  return results;
}

}  // namespace lrr
