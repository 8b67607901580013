#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrr/error.hpp"

namespace lrr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Quantity { Displacement, VonMisesStress };

inline std::string_view to_string(Quantity q) {
  return q == Quantity::Displacement ? "disp" : "stress";
}

inline Quantity parse_quantity(std::string_view s) {
  if (s == "disp" || s == "displacement") return Quantity::Displacement;
  if (s == "stress") return Quantity::VonMisesStress;
  fail(ErrorKind::InvalidArgument, "unknown quantity '" + std::string(s) + "' (expected disp or stress)");
}

// Values per node/element used by the nodewise error: x,y,z for displacements.
inline Index block_size(Quantity q) { return q == Quantity::Displacement ? 3 : 1; }

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

// First non-finite coefficient in column-major order, if any.
template <typename Derived>
std::optional<Index> first_non_finite(const Eigen::DenseBase<Derived>& x) {
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i)
      if (!std::isfinite(x(i, j))) return j * x.rows() + i;
  return std::nullopt;
}

}  // namespace lrr
