#include "lrr/kpca.hpp"

#include <Eigen/Eigenvalues>

#include "lrr/io.hpp"

namespace lrr {

CenteredGram center_gram(const Eigen::Ref<const Matrix>& k) {
  require(k.rows() == k.cols(), ErrorKind::ShapeMismatch, "gram matrix must be square");
  CenteredGram out;
  out.row_means = k.rowwise().mean();
  out.total_mean = out.row_means.mean();
  const Vector col_means = k.colwise().mean().transpose();
  out.matrix = k;
  out.matrix.colwise() -= out.row_means;
  out.matrix.rowwise() -= col_means.transpose();
  out.matrix.array() += out.total_mean;
  return out;
}

KernelRidgeModel fit_kernel_ridge(const KernelFunction& kernel, const Eigen::Ref<const Matrix>& inputs,
                                  const Eigen::Ref<const Matrix>& targets, double ridge) {
  kernel.validate();
  require(inputs.cols() == targets.cols(), ErrorKind::ShapeMismatch, "kernel ridge: input/target sample counts differ");
  require(ridge > 0.0 && std::isfinite(ridge), ErrorKind::InvalidArgument, "kernel ridge regularization must be positive");

  KernelRidgeModel model;
  model.kernel = kernel;
  model.ridge = ridge;
  model.training_reduced = inputs.transpose();
  model.intercept = targets.rowwise().mean();

  Matrix system = gram(kernel, inputs);
  system.diagonal().array() += ridge;
  const Matrix rhs = (targets.colwise() - model.intercept).transpose();

  Eigen::LLT<Matrix> llt(system);
  if (llt.info() == Eigen::Success) {
    model.dual_weights = llt.solve(rhs);
  } else {
    Eigen::LDLT<Matrix> ldlt(system);
    require(ldlt.info() == Eigen::Success, ErrorKind::Fit, "kernel ridge system is singular");
    model.dual_weights = ldlt.solve(rhs);
  }
  // Normwise backward error; a stable solve keeps it near machine precision.
  const double scale = system.norm() * model.dual_weights.norm() + rhs.norm();
  const double residual = (system * model.dual_weights - rhs).norm();
  if (scale > 0.0 && !(residual <= 1e-10 * scale))
    fail(ErrorKind::Fit, "kernel ridge system is singular (backward error " + io::shortest_repr(residual / scale) +
                             "); increase the ridge");
  return model;
}

Matrix predict_kernel_ridge(const KernelRidgeModel& model, const Eigen::Ref<const Matrix>& inputs) {
  require(inputs.rows() == model.training_reduced.cols(), ErrorKind::ShapeMismatch,
          "kernel ridge: input length " + std::to_string(inputs.rows()) + " != " +
              std::to_string(model.training_reduced.cols()));
  const Matrix k = gram(model.kernel, model.training_reduced.transpose(), inputs);
  Matrix out = model.intercept.replicate(1, inputs.cols());
  out.noalias() += model.dual_weights.transpose() * k;
  return out;
}

KpcaModel kpca_fit(const Eigen::Ref<const Matrix>& states, const KpcaOptions& options) {
  options.kernel.validate();
  const Index kappa = states.cols();
  require(options.r >= 1 && options.r <= kappa, ErrorKind::InvalidArgument,
          "kpca rank r=" + std::to_string(options.r) + " outside [1, kappa=" + std::to_string(kappa) + "]");

  KpcaModel model;
  model.kernel = options.kernel;
  model.training_states = states;

  auto centered = center_gram(gram(options.kernel, states));
  model.gram_row_means = centered.row_means;
  model.gram_total_mean = centered.total_mean;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(centered.matrix);
  require(eig.info() == Eigen::Success, ErrorKind::Fit, "eigendecomposition of the centered Gram failed");
  const Index r = options.r;
  const double trace = centered.matrix.trace();
  // Eigen sorts ascending; take the trailing r in reverse.
  model.eigenvalues.resize(r);
  model.alphas.resize(kappa, r);
  for (Index l = 0; l < r; ++l) {
    const Index src = kappa - 1 - l;
    const double lambda = eig.eigenvalues()(src);
    if (!(lambda > 1e-12 * trace) || !(trace > 0.0))
      fail(ErrorKind::Fit, "centered Gram has only " + std::to_string(l) + " eigenvalues above 1e-12*trace; r=" +
                               std::to_string(r) + " requested");
    Vector u = eig.eigenvectors().col(src);
    Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0) u = -u;
    model.eigenvalues(l) = lambda;
    model.alphas.col(l) = u / std::sqrt(lambda);
  }

  const Matrix reduced = centered.matrix * model.alphas;  // kappa x r
  model.preimage = fit_kernel_ridge(options.preimage_kernel.value_or(options.kernel), reduced.transpose(), states,
                                    options.ridge);
  return model;
}

KpcaModel kpca_fit(const SnapshotMatrix& m, const KpcaOptions& options) { return kpca_fit(m.states(), options); }

Matrix kpca_reduce(const KpcaModel& model, const Eigen::Ref<const Matrix>& z) {
  require(z.rows() == model.n(), ErrorKind::ShapeMismatch,
          "kpca reduce: state length " + std::to_string(z.rows()) + " != N=" + std::to_string(model.n()));
  Matrix k = gram(model.kernel, model.training_states, z);  // kappa x B
  const Vector col_means = k.colwise().mean().transpose();
  k.colwise() -= model.gram_row_means;
  k.rowwise() -= col_means.transpose();
  k.array() += model.gram_total_mean;
  Matrix out(model.r(), z.cols());
  out.noalias() = model.alphas.transpose() * k;
  return out;
}

Matrix kpca_reconstruct(const KpcaModel& model, const Eigen::Ref<const Matrix>& zbar) {
  require(zbar.rows() == model.r(), ErrorKind::ShapeMismatch,
          "kpca reconstruct: reduced length " + std::to_string(zbar.rows()) + " != r=" + std::to_string(model.r()));
  return predict_kernel_ridge(model.preimage, zbar);
}

Matrix kpca_training_reduced(const KpcaModel& model) { return model.preimage.training_reduced.transpose(); }

}  // namespace lrr
