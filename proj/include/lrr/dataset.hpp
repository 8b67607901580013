#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lrr/types.hpp"

namespace lrr {

/// Column-assembled snapshots (N x kappa) with the aligned parameter rows
/// (kappa x p). Validated on construction and immutable afterwards.
class SnapshotMatrix {
 public:
  SnapshotMatrix(Matrix states, Matrix params, Quantity quantity);

  const Matrix& states() const { return states_; }
  const Matrix& params() const { return params_; }
  Quantity quantity() const { return quantity_; }

  Index n() const { return states_.rows(); }
  Index kappa() const { return states_.cols(); }
  Index p() const { return params_.cols(); }

  /// Subset of columns, in the given order.
  SnapshotMatrix select(const std::vector<Index>& columns) const;

 private:
  Matrix states_;
  Matrix params_;
  Quantity quantity_;
};

struct CenteringStats {
  Vector mean;
  bool enabled = true;
};

struct StressTensorSample {
  double sx = 0, sy = 0, sz = 0, sxy = 0, syz = 0, szx = 0;
};

template <typename Scalar>
Scalar von_mises(Scalar sx, Scalar sy, Scalar sz, Scalar sxy, Scalar syz, Scalar szx) {
  using std::sqrt;
  const Scalar normal = (sx - sy) * (sx - sy) + (sy - sz) * (sy - sz) + (sz - sx) * (sz - sx);
  const Scalar shear = sxy * sxy + syz * syz + szx * szx;
  return sqrt(Scalar(0.5) * normal + Scalar(3) * shear);
}

/// Equivalent (von Mises) stress in the units of the components.
double von_mises(const StressTensorSample& t);

/// Per-element von Mises stress for element-major (sx,sy,sz,sxy,syz,szx)
/// component columns: input is (6 * elements) x kappa.
Matrix von_mises_columns(const Matrix& components);

/// Subtracts the column mean. Returns the centered matrix and the mean.
template <typename Derived>
std::pair<MatrixX<typename Derived::Scalar>, VectorX<typename Derived::Scalar>> center_columns(
    const Eigen::MatrixBase<Derived>& m) {
  VectorX<typename Derived::Scalar> mean = m.rowwise().mean();
  MatrixX<typename Derived::Scalar> centered = m.colwise() - mean;
  return {std::move(centered), std::move(mean)};
}

std::pair<Matrix, CenteringStats> center(const SnapshotMatrix& m);

enum class SamplingStrategy { Grid, UniformRandom, LowDiscrepancy };

SamplingStrategy parse_sampling_strategy(std::string_view s);

/// Parameter rows in [0,1]^p, deterministic in (strategy, seed). Result is count x p.
Matrix sample_parameters(Index p, Index count, SamplingStrategy strategy, std::uint64_t seed);

/// Desk-scale stand-in for the high-fidelity model. States are
///   z(mu) = offset + sum_{k=1..K} warp^(k-1) * V_k * g(mu)^k,  g(mu) = A (mu - 1/2)
/// with K = 1 for degree <= 1 and K = degree otherwise (powers are componentwise).
struct ManifoldSpec {
  Index n = 300;
  Index intrinsic_dim = 5;
  std::uint64_t basis_seed = 1;
  int degree = 0;
  double warp = 0.5;
  double offset_scale = 1.0;
  Quantity quantity = Quantity::Displacement;
};

SnapshotMatrix generate_synthetic(const ManifoldSpec& spec, const Matrix& params);

struct TrainTestSplit {
  SnapshotMatrix train;
  SnapshotMatrix test;
};

/// Seeded random split; test receives round(test_fraction * kappa) columns (at least one
/// column stays in train).
TrainTestSplit split_train_test(const SnapshotMatrix& m, double test_fraction, std::uint64_t seed);

enum class StorageType { F32, F64 };

/// Reads the directory layout: manifest.json, params.csv and states.bin
/// (or states6.bin holding six stress components per element).
SnapshotMatrix load_dataset(const std::filesystem::path& dir, Quantity quantity);

/// Writes the directory layout through a temporary directory and a rename.
void write_dataset(const SnapshotMatrix& m, const std::filesystem::path& dir,
                   StorageType dtype = StorageType::F64);

/// Hex SHA-256 over the states and parameters, used for provenance.
std::string dataset_digest(const SnapshotMatrix& m);

}  // namespace lrr
