#include "lrr/kernel.hpp"

#include <sstream>

#include "lrr/io.hpp"

namespace lrr {

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Polynomial: return "poly";
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Linear: return "linear";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view s) {
  if (s == "poly" || s == "polynomial") return KernelKind::Polynomial;
  if (s == "rbf") return KernelKind::Rbf;
  if (s == "linear") return KernelKind::Linear;
  fail(ErrorKind::InvalidArgument, "unknown kernel '" + std::string(s) + "' (expected poly, rbf or linear)");
}

void KernelFunction::validate() const {
  require(std::isfinite(gamma) && std::isfinite(c0), ErrorKind::InvalidArgument, "kernel parameters must be finite");
  if (kind == KernelKind::Polynomial)
    require(degree >= 1, ErrorKind::InvalidArgument, "polynomial kernel degree must be >= 1");
  if (kind == KernelKind::Rbf) require(gamma > 0, ErrorKind::InvalidArgument, "rbf gamma must be positive");
}

std::string describe(const KernelFunction& k) {
  std::ostringstream os;
  os << to_string(k.kind);
  if (k.kind == KernelKind::Polynomial)
    os << "(gamma=" << io::shortest_repr(k.gamma) << ", c0=" << io::shortest_repr(k.c0) << ", d=" << k.degree << ")";
  else if (k.kind == KernelKind::Rbf)
    os << "(gamma=" << io::shortest_repr(k.gamma) << ")";
  return os.str();
}

namespace detail {

void kernel_overflow(const KernelFunction& k) {
  fail(ErrorKind::NonFinite, "kernel " + describe(k) +
                                 " produced a non-finite value; rescale the inputs or reduce gamma/degree");
}

}  // namespace detail

Matrix gram(const KernelFunction& k, const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  require(a.rows() == b.rows(), ErrorKind::ShapeMismatch,
          "gram operands differ in dimension: " + std::to_string(a.rows()) + " vs " + std::to_string(b.rows()));
  Matrix out(a.cols(), b.cols());
  out.noalias() = a.transpose() * b;
  if (k.kind == KernelKind::Rbf) {
    const Vector na = a.colwise().squaredNorm().transpose();
    const Vector nb = b.colwise().squaredNorm().transpose();
    for (Index j = 0; j < out.cols(); ++j)
      for (Index i = 0; i < out.rows(); ++i)
        out(i, j) = detail::apply_kernel(k, out(i, j), std::max(0.0, na(i) + nb(j) - 2.0 * out(i, j)));
  } else {
    for (Index j = 0; j < out.cols(); ++j)
      for (Index i = 0; i < out.rows(); ++i) out(i, j) = detail::apply_kernel(k, out(i, j), 0.0);
  }
  if (!out.allFinite()) detail::kernel_overflow(k);
  return out;
}

Matrix gram(const KernelFunction& k, const Eigen::Ref<const Matrix>& x) {
  Matrix out = gram(k, x, x);
  // Symmetrize exactly; the GEMM may round the two triangles differently.
  for (Index j = 0; j < out.cols(); ++j)
    for (Index i = j + 1; i < out.rows(); ++i) out(j, i) = out(i, j);
  return out;
}

}  // namespace lrr
