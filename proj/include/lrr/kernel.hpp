#pragma once

#include <cmath>
#include <string>

#include "lrr/types.hpp"

namespace lrr {

enum class KernelKind { Polynomial, Rbf, Linear };

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view s);

/// polynomial: (gamma a.b + c0)^degree
/// rbf:        exp(-gamma |a - b|^2)
/// linear:     a.b
struct KernelFunction {
  KernelKind kind = KernelKind::Polynomial;
  double gamma = 1.0;
  double c0 = 0.0;
  int degree = 1;

  static KernelFunction polynomial(double gamma, double c0, int degree) {
    return {KernelKind::Polynomial, gamma, c0, degree};
  }
  static KernelFunction rbf(double gamma) { return {KernelKind::Rbf, gamma, 0.0, 1}; }
  static KernelFunction linear() { return {KernelKind::Linear, 1.0, 0.0, 1}; }

  void validate() const;

  friend bool operator==(const KernelFunction&, const KernelFunction&) = default;
};

std::string describe(const KernelFunction& k);

namespace detail {

inline double apply_kernel(const KernelFunction& k, double dot, double sqdist) {
  switch (k.kind) {
    case KernelKind::Polynomial: {
      const double base = k.gamma * dot + k.c0;
      double out = 1.0;
      for (int i = 0; i < k.degree; ++i) out *= base;
      return out;
    }
    case KernelKind::Rbf: return std::exp(-k.gamma * sqdist);
    case KernelKind::Linear: return dot;
  }
  return 0.0;
}

[[noreturn]] void kernel_overflow(const KernelFunction& k);

}  // namespace detail

template <typename DerivedA, typename DerivedB>
double kernel_eval(const KernelFunction& k, const Eigen::MatrixBase<DerivedA>& a,
                   const Eigen::MatrixBase<DerivedB>& b) {
  require(a.size() == b.size(), ErrorKind::ShapeMismatch,
          "kernel arguments differ in length: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  const double dot = a.dot(b);
  const double sq = k.kind == KernelKind::Rbf ? (a - b).squaredNorm() : 0.0;
  const double v = detail::apply_kernel(k, dot, sq);
  if (!std::isfinite(v)) detail::kernel_overflow(k);
  return v;
}

/// Cross Gram matrix between the columns of `a` (rows of the result) and the
/// columns of `b`. Entries are computed from a single GEMM of inner products.
Matrix gram(const KernelFunction& k, const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

/// Symmetric Gram matrix of the columns of `x`.
Matrix gram(const KernelFunction& k, const Eigen::Ref<const Matrix>& x);

}  // namespace lrr
