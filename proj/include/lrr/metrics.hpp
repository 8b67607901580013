#pragma once

#include <string>
#include <vector>

#include "lrr/types.hpp"

namespace lrr {

/// 1 - |reference - candidate| / |reference|. Equals 1 only for an exact match
/// and is unbounded below.
template <typename DerivedA, typename DerivedB>
double score(const Eigen::MatrixBase<DerivedA>& reference, const Eigen::MatrixBase<DerivedB>& candidate) {
  require(reference.size() == candidate.size(), ErrorKind::ShapeMismatch,
          "score: lengths differ (" + std::to_string(reference.size()) + " vs " + std::to_string(candidate.size()) + ")");
  const double norm = reference.norm();
  require(norm > 0.0, ErrorKind::InvalidArgument, "score: reference has zero norm");
  return 1.0 - (reference - candidate).norm() / norm;
}

/// Euclidean error per node (block = values per node) or element (block = 1).
template <typename DerivedA, typename DerivedB>
Vector nodewise_error(const Eigen::MatrixBase<DerivedA>& reference, const Eigen::MatrixBase<DerivedB>& candidate,
                      Index block) {
  require(block >= 1, ErrorKind::InvalidArgument, "block size must be >= 1");
  require(reference.size() == candidate.size(), ErrorKind::ShapeMismatch, "nodewise error: lengths differ");
  require(reference.size() % block == 0, ErrorKind::ShapeMismatch,
          "nodewise error: length " + std::to_string(reference.size()) + " not divisible by block " + std::to_string(block));
  const Index nodes = reference.size() / block;
  Vector out(nodes);
  for (Index m = 0; m < nodes; ++m) out(m) = (reference.segment(m * block, block) - candidate.segment(m * block, block)).norm();
  return out;
}

struct ErrorSummary {
  double mean = 0.0;
  double max = 0.0;
};

template <typename Derived>
ErrorSummary aggregate(const Eigen::MatrixBase<Derived>& errors) {
  require(errors.size() > 0, ErrorKind::InvalidArgument, "aggregate: empty error vector");
  return {errors.mean(), errors.maxCoeff()};
}

struct ScoreReport {
  std::string sim_id;
  double s_rec = 0.0;
  double s_regr = 0.0;
  double s_appr = 0.0;
  double e2_mean = 0.0;
  double e2_max = 0.0;
  double delta_t_ms = 0.0;
};

/// Field-wise arithmetic mean; e2_max is the mean of the per-simulation maxima.
ScoreReport mean_scores(const std::vector<ScoreReport>& reports);

inline constexpr const char* kScoreCsvHeader = "sim_id,s_rec,s_regr,s_appr,e2_mean,e2_max,delta_t_ms";

std::string to_csv(const std::vector<ScoreReport>& reports);
std::vector<ScoreReport> parse_score_csv(const std::string& text);
/// JSON object with the mean report and the simulation count.
std::string summary_json(const std::vector<ScoreReport>& reports);

/// Tukey boxplot statistics with linearly interpolated quartiles.
struct BoxStats {
  double q1 = 0, median = 0, q3 = 0;
  double whisker_low = 0, whisker_high = 0;
  std::vector<double> outliers;
};

BoxStats box_stats(std::vector<double> values);

/// Linear-interpolation quantile of sorted values, q in [0,1].
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace lrr
