#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "lrr/types.hpp"

namespace lrr::test {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n(gen);
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed, double scale = 1.0) { return random_matrix(n, 1, seed, scale).col(0); }

inline Matrix random_unit(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(gen);
  return m;
}

/// Largest principal angle (radians) between the column spans of two
/// orthonormal bases of equal width. Uses the sine form, which stays accurate
/// for small angles where acos of the cosines does not.
inline double max_principal_angle(const Matrix& a, const Matrix& b) {
  const Matrix residual = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Matrix> svd(residual);
  return std::asin(std::min(1.0, svd.singularValues().maxCoeff()));
}

inline Matrix pairwise_distances(const Matrix& cols) {
  Matrix d(cols.cols(), cols.cols());
  for (Index i = 0; i < cols.cols(); ++i)
    for (Index j = 0; j < cols.cols(); ++j) d(i, j) = (cols.col(i) - cols.col(j)).norm();
  return d;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("lrr-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace lrr::test
