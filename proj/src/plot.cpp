#include "lrr/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lrr {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string boxplot_svg(const std::vector<BoxSeries>& series, const std::string& title) {
  require(!series.empty(), ErrorKind::InvalidArgument, "boxplot needs at least one series");
  std::vector<BoxStats> stats;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    std::vector<double> finite;
    std::copy_if(s.values.begin(), s.values.end(), std::back_inserter(finite), [](double v) { return std::isfinite(v); });
    require(!finite.empty(), ErrorKind::InvalidArgument, "series '" + s.label + "' has no finite values");
    stats.push_back(box_stats(finite));
    lo = std::min(lo, *std::min_element(finite.begin(), finite.end()));
    hi = std::max(hi, *std::max_element(finite.begin(), finite.end()));
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double left = 70, top = 40, plot_h = 320, slot = 110;
  const double width = left + slot * static_cast<double>(series.size()) + 20;
  const double height = top + plot_h + 50;
  auto y = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream os;
  os << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << num(width) << R"(" height=")" << num(height)
     << R"(" font-family="sans-serif" font-size="12">)" << "\n";
  os << R"(<rect width="100%" height="100%" fill="white"/>)" << "\n";
  os << R"(<text x=")" << num(width / 2) << R"(" y="22" text-anchor="middle" font-size="14">)" << escape(title) << "</text>\n";
  os << R"(<line x1=")" << left << R"(" y1=")" << top << R"(" x2=")" << left << R"(" y2=")" << top + plot_h
     << R"(" stroke="black"/>)" << "\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = lo + (hi - lo) * t / 5.0;
    os << R"(<line x1=")" << left - 4 << R"(" y1=")" << num(y(v)) << R"(" x2=")" << left << R"(" y2=")" << num(y(v))
       << R"(" stroke="black"/>)";
    os << R"(<text x=")" << left - 6 << R"(" y=")" << num(y(v) + 4) << R"(" text-anchor="end">)" << num(v) << "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& b = stats[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5);
    const double half = 30;
    os << R"(<g class="box">)";
    os << R"(<line x1=")" << num(cx) << R"(" y1=")" << num(y(b.whisker_high)) << R"(" x2=")" << num(cx) << R"(" y2=")"
       << num(y(b.q3)) << R"(" stroke="black"/>)";
    os << R"(<line x1=")" << num(cx) << R"(" y1=")" << num(y(b.q1)) << R"(" x2=")" << num(cx) << R"(" y2=")"
       << num(y(b.whisker_low)) << R"(" stroke="black"/>)";
    for (double w : {b.whisker_low, b.whisker_high})
      os << R"(<line x1=")" << num(cx - half / 2) << R"(" y1=")" << num(y(w)) << R"(" x2=")" << num(cx + half / 2)
         << R"(" y2=")" << num(y(w)) << R"(" stroke="black"/>)";
    os << R"(<rect x=")" << num(cx - half) << R"(" y=")" << num(y(b.q3)) << R"(" width=")" << num(2 * half)
       << R"(" height=")" << num(std::max(y(b.q1) - y(b.q3), 0.5)) << R"(" fill="#9ecae1" stroke="black"/>)";
    os << R"(<line x1=")" << num(cx - half) << R"(" y1=")" << num(y(b.median)) << R"(" x2=")" << num(cx + half)
       << R"(" y2=")" << num(y(b.median)) << R"(" stroke="#d62728" stroke-width="2"/>)";
    for (double o : b.outliers)
      os << R"(<circle cx=")" << num(cx) << R"(" cy=")" << num(y(o)) << R"(" r="2.5" fill="none" stroke="black"/>)";
    os << R"(<text x=")" << num(cx) << R"(" y=")" << num(top + plot_h + 20) << R"(" text-anchor="middle">)"
       << escape(series[i].label) << "</text>";
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string score_boxplot_svg(const std::vector<ScoreReport>& reports, const std::string& title) {
  std::vector<BoxSeries> series{{"s_rec", {}}, {"s_regr", {}}, {"s_appr", {}}};
  for (const auto& r : reports) {
    series[0].values.push_back(r.s_rec);
    series[1].values.push_back(r.s_regr);
    series[2].values.push_back(r.s_appr);
  }
  return boxplot_svg(series, title);
}

}  // namespace lrr
