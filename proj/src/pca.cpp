#include "lrr/pca.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#if defined(__linux__)
#include <sys/mman.h>
#endif

#include "lrr/io.hpp"

namespace lrr {

namespace {

// Outputs above this size are written with streaming stores: they cannot stay
// in cache anyway, and skipping the read-for-ownership halves memory traffic.
constexpr std::size_t kStreamingBytes = std::size_t{64} << 20;

// Fresh multi-megabyte buffers otherwise fault in 4 KiB at a time.
void advise_huge_pages([[maybe_unused]] Matrix& m) {
#if defined(__linux__) && defined(MADV_HUGEPAGE)
  constexpr std::uintptr_t huge = std::uintptr_t{2} << 20;
  const auto begin = (reinterpret_cast<std::uintptr_t>(m.data()) + huge - 1) & ~(huge - 1);
  const auto end = reinterpret_cast<std::uintptr_t>(m.data() + m.size()) & ~(huge - 1);
  if (end > begin) madvise(reinterpret_cast<void*>(begin), end - begin, MADV_HUGEPAGE);
#endif
}

void affine_streaming(const Matrix& basis, const Vector& mean, const Eigen::Ref<const Matrix>& zbar, Matrix& out) {
  constexpr Index block = 1024;
  Vector tmp(block);
  for (Index i = 0; i < basis.rows(); i += block) {
    const Index h = std::min(block, basis.rows() - i);
    const auto rows = basis.middleRows(i, h);
    for (Index c = 0; c < zbar.cols(); ++c) {
      tmp.head(h) = mean.segment(i, h);
      tmp.head(h).noalias() += rows * zbar.col(c);
      double* dst = out.col(c).data() + i;
      Index k = 0;
#if defined(__SSE2__)
      if (reinterpret_cast<std::uintptr_t>(dst) % 16 == 0)
        for (; k + 2 <= h; k += 2) _mm_stream_pd(dst + k, _mm_loadu_pd(tmp.data() + k));
#endif
      for (; k < h; ++k) dst[k] = tmp(k);
    }
  }
#if defined(__SSE2__)
  _mm_sfence();
#endif
}

struct ThinSvd {
  Matrix u;  // N x min(N, kappa)
  Vector s;
};

// Thin SVD without the N x N covariance. Tall inputs are QR-compressed first
// so the dense SVD only sees a kappa x kappa factor.
ThinSvd thin_svd(const Matrix& a, Index keep) {
  ThinSvd out;
  if (a.rows() > a.cols()) {
    Eigen::HouseholderQR<Matrix> qr(a);
    const Matrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Matrix> svd(r, Eigen::ComputeFullU);
    out.s = svd.singularValues();
    Matrix padded = Matrix::Zero(a.rows(), keep);
    padded.topRows(a.cols()) = svd.matrixU().leftCols(keep);
    out.u = qr.householderQ() * padded;
  } else {
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
    out.s = svd.singularValues();
    out.u = svd.matrixU().leftCols(keep);
  }
  return out;
}

void fix_signs(Matrix& basis) {
  for (Index l = 0; l < basis.cols(); ++l) {
    Index arg = 0;
    basis.col(l).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, l) < 0) basis.col(l) *= -1.0;
  }
}

}  // namespace

Vector PcaModel::covariance_eigenvalues(Index kappa) const {
  return singular_values.array().square() / static_cast<double>(kappa);
}

PcaModel pca_fit(const Eigen::Ref<const Matrix>& states, Index r) {
  const Index n = states.rows();
  const Index kappa = states.cols();
  const Index rank_cap = std::min(n, kappa);
  require(r >= 1 && r <= rank_cap, ErrorKind::InvalidArgument,
          "pca rank r=" + std::to_string(r) + " outside [1, min(N, kappa)=" + std::to_string(rank_cap) + "]");
  auto [centered, mean] = center_columns(states);
  auto svd = thin_svd(centered, r);

  PcaModel model;
  model.basis = std::move(svd.u);
  fix_signs(model.basis);
  model.singular_values = std::move(svd.s);
  model.mean = std::move(mean);
  if (r < model.singular_values.size()) {
    const double lr = model.singular_values(r - 1) * model.singular_values(r - 1);
    const double lnext = model.singular_values(r) * model.singular_values(r);
    if (std::abs(lr - lnext) <= 1e-12 * std::max(1.0, lr))
      model.warnings.push_back("eigenvalue " + std::to_string(r) + " ties its successor (" + io::shortest_repr(lr) +
                               "); the retained subspace is not unique");
  }
  return model;
}

PcaModel pca_fit(const SnapshotMatrix& m, Index r) { return pca_fit(m.states(), r); }

Matrix pca_reduce(const PcaModel& model, const Eigen::Ref<const Matrix>& z) {
  require(z.rows() == model.n(), ErrorKind::ShapeMismatch,
          "pca reduce: state length " + std::to_string(z.rows()) + " != N=" + std::to_string(model.n()));
  Matrix out(model.r(), z.cols());
  out.noalias() = model.basis.transpose() * (z.colwise() - model.mean);
  return out;
}

Matrix pca_reconstruct(const PcaModel& model, const Eigen::Ref<const Matrix>& zbar) {
  require(zbar.rows() == model.r(), ErrorKind::ShapeMismatch,
          "pca reconstruct: reduced length " + std::to_string(zbar.rows()) + " != r=" + std::to_string(model.r()));
  if (static_cast<std::size_t>(model.n()) * static_cast<std::size_t>(zbar.cols()) * sizeof(double) > kStreamingBytes) {
    Matrix out(model.n(), zbar.cols());
    advise_huge_pages(out);
    affine_streaming(model.basis, model.mean, zbar, out);
    return out;
  }
  Matrix out = model.mean.replicate(1, zbar.cols());
  out.noalias() += model.basis * zbar;
  return out;
}

Vector scaled_singular_values(const PcaModel& model) {
  const double total = model.singular_values.sum();
  require(total > 0.0, ErrorKind::Data, "all singular values are zero (constant data)");
  return model.singular_values / total;
}

Vector reconstruction_score_by_rank(const Eigen::Ref<const Matrix>& states, Index max_r) {
  const auto model = pca_fit(states, max_r);
  const Matrix centered = states.colwise() - model.mean;
  const Matrix coeffs = model.basis.transpose() * centered;
  Vector out = Vector::Zero(max_r);
  for (Index c = 0; c < states.cols(); ++c) {
    const double norm = states.col(c).norm();
    require(norm > 0.0, ErrorKind::Data, "reconstruction score undefined for a zero state (column " + std::to_string(c) + ")");
    double residual = centered.col(c).squaredNorm();
    for (Index l = 0; l < max_r; ++l) {
      residual -= coeffs(l, c) * coeffs(l, c);
      out(l) += 1.0 - std::sqrt(std::max(residual, 0.0)) / norm;
    }
  }
  return out / static_cast<double>(states.cols());
}

Index select_rank(const Eigen::Ref<const Matrix>& states, double threshold) {
  const Index cap = std::min(states.rows(), states.cols());
  const Vector scores = reconstruction_score_by_rank(states, cap);
  for (Index l = 0; l < cap; ++l)
    if (scores(l) >= threshold) return l + 1;
  return cap;
}

}  // namespace lrr
