#pragma once

#include <string>
#include <vector>

#include "lrr/metrics.hpp"

namespace lrr {

struct BoxSeries {
  std::string label;
  std::vector<double> values;
};

/// Self-contained SVG with one Tukey box per series on a shared vertical axis.
/// Non-finite values are dropped before the statistics are computed.
std::string boxplot_svg(const std::vector<BoxSeries>& series, const std::string& title);

/// One box each for s_rec, s_regr and s_appr.
std::string score_boxplot_svg(const std::vector<ScoreReport>& reports, const std::string& title);

}  // namespace lrr
