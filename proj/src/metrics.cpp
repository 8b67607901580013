#include "lrr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lrr/io.hpp"

namespace lrr {

ScoreReport mean_scores(const std::vector<ScoreReport>& reports) {
  require(!reports.empty(), ErrorKind::InvalidArgument, "mean_scores: no reports");
  ScoreReport out;
  out.sim_id = "mean";
  for (const auto& r : reports) {
    out.s_rec += r.s_rec;
    out.s_regr += r.s_regr;
    out.s_appr += r.s_appr;
    out.e2_mean += r.e2_mean;
    out.e2_max += r.e2_max;
    out.delta_t_ms += r.delta_t_ms;
  }
  const double n = static_cast<double>(reports.size());
  out.s_rec /= n;
  out.s_regr /= n;
  out.s_appr /= n;
  out.e2_mean /= n;
  out.e2_max /= n;
  out.delta_t_ms /= n;
  return out;
}

std::string to_csv(const std::vector<ScoreReport>& reports) {
  std::ostringstream os;
  os << kScoreCsvHeader << "\n";
  for (const auto& r : reports) {
    os << r.sim_id << "," << io::shortest_repr(r.s_rec) << "," << io::shortest_repr(r.s_regr) << ","
       << io::shortest_repr(r.s_appr) << "," << io::shortest_repr(r.e2_mean) << "," << io::shortest_repr(r.e2_max) << ","
       << io::shortest_repr(r.delta_t_ms) << "\n";
  }
  return os.str();
}

std::vector<ScoreReport> parse_score_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Data, "score csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == kScoreCsvHeader, ErrorKind::Data, "score csv header must be '" + std::string(kScoreCsvHeader) + "'");
  std::vector<ScoreReport> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    require(cells.size() == 7, ErrorKind::Data, "score csv row has " + std::to_string(cells.size()) + " cells: " + line);
    ScoreReport r;
    r.sim_id = cells[0];
    double* fields[] = {&r.s_rec, &r.s_regr, &r.s_appr, &r.e2_mean, &r.e2_max, &r.delta_t_ms};
    for (int k = 0; k < 6; ++k) {
      const auto& c = cells[static_cast<std::size_t>(k + 1)];
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), *fields[k]);
      require(ec == std::errc(), ErrorKind::Data, "score csv: cannot parse '" + c + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string summary_json(const std::vector<ScoreReport>& reports) {
  const auto m = mean_scores(reports);
  nlohmann::json j = {
      {"simulations", reports.size()}, {"s_rec", m.s_rec},     {"s_regr", m.s_regr},         {"s_appr", m.s_appr},
      {"e2_mean", m.e2_mean},          {"e2_max", m.e2_max},   {"delta_t_ms", m.delta_t_ms},
  };
  return j.dump(2) + "\n";
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), ErrorKind::InvalidArgument, "quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> values) {
  require(!values.empty(), ErrorKind::InvalidArgument, "box_stats: empty sample");
  std::sort(values.begin(), values.end());
  BoxStats b;
  b.q1 = quantile_sorted(values, 0.25);
  b.median = quantile_sorted(values, 0.5);
  b.q3 = quantile_sorted(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr;
  const double hi = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  bool have_low = false;
  for (double v : values) {
    if (v < lo || v > hi) {
      b.outliers.push_back(v);
      continue;
    }
    if (!have_low) {
      b.whisker_low = v;
      have_low = true;
    }
    b.whisker_high = v;
  }
  return b;
}

}  // namespace lrr
