#include "lrr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lrr/io.hpp"

namespace lrr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string describe_index(Index flat, Index rows) {
  std::ostringstream os;
  os << "flat index " << flat << " (row " << flat % rows << ", column " << flat / rows << ")";
  return os.str();
}

void check_duplicate_rows(const Matrix& params) {
  std::vector<Index> order(static_cast<std::size_t>(params.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  auto less = [&](Index a, Index b) {
    for (Index j = 0; j < params.cols(); ++j) {
      if (params(a, j) < params(b, j)) return true;
      if (params(a, j) > params(b, j)) return false;
    }
    return a < b;
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t k = 1; k < order.size(); ++k) {
    if ((params.row(order[k - 1]).array() == params.row(order[k]).array()).all()) {
      fail(ErrorKind::DuplicateParameters, "duplicate parameter rows at indices " +
                                               std::to_string(order[k - 1]) + " and " +
                                               std::to_string(order[k]));
    }
  }
}

}  // namespace

SnapshotMatrix::SnapshotMatrix(Matrix states, Matrix params, Quantity quantity)
    : states_(std::move(states)), params_(std::move(params)), quantity_(quantity) {
  require(states_.cols() >= 1, ErrorKind::Data, "snapshot matrix needs at least one column");
  require(states_.rows() >= 1, ErrorKind::Data, "snapshot matrix needs at least one row");
  require(params_.rows() == states_.cols(), ErrorKind::ShapeMismatch,
          "parameter rows (" + std::to_string(params_.rows()) + ") do not match snapshot columns (" +
              std::to_string(states_.cols()) + ")");
  require(params_.cols() >= 1, ErrorKind::Data, "parameter vectors must have at least one component");
  if (auto bad = first_non_finite(states_))
    fail(ErrorKind::NonFinite, "non-finite state entry at " + describe_index(*bad, states_.rows()));
  if (auto bad = first_non_finite(params_))
    fail(ErrorKind::NonFinite, "non-finite parameter at " + describe_index(*bad, params_.rows()));
  for (Index i = 0; i < params_.rows(); ++i)
    for (Index j = 0; j < params_.cols(); ++j)
      if (params_(i, j) < 0.0 || params_(i, j) > 1.0)
        fail(ErrorKind::Data, "parameter row " + std::to_string(i) + " component " + std::to_string(j) +
                                  " = " + io::shortest_repr(params_(i, j)) + " outside [0,1]");
  check_duplicate_rows(params_);
}

SnapshotMatrix SnapshotMatrix::select(const std::vector<Index>& columns) const {
  Matrix s(n(), static_cast<Index>(columns.size()));
  Matrix p(static_cast<Index>(columns.size()), this->p());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const Index c = columns[k];
    require(c >= 0 && c < kappa(), ErrorKind::InvalidArgument, "column index out of range");
    s.col(static_cast<Index>(k)) = states_.col(c);
    p.row(static_cast<Index>(k)) = params_.row(c);
  }
  return SnapshotMatrix(std::move(s), std::move(p), quantity_);
}

double von_mises(const StressTensorSample& t) {
  const double v = von_mises(t.sx, t.sy, t.sz, t.sxy, t.syz, t.szx);
  require(std::isfinite(v), ErrorKind::NonFinite, "non-finite stress tensor component");
  return v;
}

Matrix von_mises_columns(const Matrix& components) {
  require(components.rows() % 6 == 0, ErrorKind::ShapeMismatch,
          "component stress rows must be a multiple of 6");
  const Index elements = components.rows() / 6;
  Matrix out(elements, components.cols());
  for (Index c = 0; c < components.cols(); ++c) {
    for (Index e = 0; e < elements; ++e) {
      const auto s = components.col(c).segment(6 * e, 6);
      out(e, c) = von_mises(s(0), s(1), s(2), s(3), s(4), s(5));
    }
  }
  if (auto bad = first_non_finite(out))
    fail(ErrorKind::NonFinite, "non-finite stress component feeding " + describe_index(*bad, elements));
  return out;
}

std::pair<Matrix, CenteringStats> center(const SnapshotMatrix& m) {
  auto [centered, mean] = center_columns(m.states());
  return {std::move(centered), CenteringStats{std::move(mean), true}};
}

SamplingStrategy parse_sampling_strategy(std::string_view s) {
  if (s == "grid") return SamplingStrategy::Grid;
  if (s == "uniform" || s == "uniform_random" || s == "random") return SamplingStrategy::UniformRandom;
  if (s == "halton" || s == "sobol" || s == "low_discrepancy" || s == "sobol_like_low_discrepancy")
    return SamplingStrategy::LowDiscrepancy;
  fail(ErrorKind::InvalidArgument, "unknown sampling strategy '" + std::string(s) + "'");
}

namespace {

// Integer power with saturation so overflow can't masquerade as a match.
Index ipow_saturating(Index base, Index exp) {
  Index out = 1;
  for (Index i = 0; i < exp; ++i) {
    if (out > std::numeric_limits<Index>::max() / std::max<Index>(base, 1)) return std::numeric_limits<Index>::max();
    out *= base;
  }
  return out;
}

double unit_double(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double result = 0.0;
  double f = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= static_cast<double>(base);
  }
  return result;
}

std::vector<std::uint64_t> first_primes(Index count) {
  std::vector<std::uint64_t> primes;
  for (std::uint64_t c = 2; static_cast<Index>(primes.size()) < count; ++c) {
    bool prime = true;
    for (auto q : primes) {
      if (q * q > c) break;
      if (c % q == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

}  // namespace

Matrix sample_parameters(Index p, Index count, SamplingStrategy strategy, std::uint64_t seed) {
  require(p >= 1, ErrorKind::InvalidArgument, "parameter dimension must be >= 1");
  require(count >= 1, ErrorKind::InvalidArgument, "sample count must be >= 1");
  Matrix out(count, p);
  switch (strategy) {
    case SamplingStrategy::Grid: {
      auto levels = static_cast<Index>(std::llround(std::pow(static_cast<double>(count), 1.0 / static_cast<double>(p))));
      levels = std::max<Index>(levels, 1);
      while (levels > 1 && ipow_saturating(levels, p) > count) --levels;
      while (ipow_saturating(levels + 1, p) <= count) ++levels;
      if (ipow_saturating(levels, p) != count) {
        const Index lo = ipow_saturating(levels, p);
        const Index hi = ipow_saturating(levels + 1, p);
        fail(ErrorKind::InvalidArgument,
             "grid sampling needs count = levels^" + std::to_string(p) + "; nearest valid counts are " +
                 std::to_string(lo) + " (" + std::to_string(levels) + " levels) and " + std::to_string(hi) +
                 " (" + std::to_string(levels + 1) + " levels)");
      }
      for (Index row = 0; row < count; ++row) {
        Index rest = row;
        for (Index j = p - 1; j >= 0; --j) {
          const Index level = rest % levels;
          rest /= levels;
          out(row, j) = levels == 1 ? 0.5 : static_cast<double>(level) / static_cast<double>(levels - 1);
        }
      }
      break;
    }
    case SamplingStrategy::UniformRandom: {
      std::mt19937_64 gen(seed);
      for (Index row = 0; row < count; ++row)
        for (Index j = 0; j < p; ++j) out(row, j) = unit_double(gen);
      break;
    }
    case SamplingStrategy::LowDiscrepancy: {
      // Halton sequence; a nonzero seed applies a Cranley-Patterson rotation.
      const auto primes = first_primes(p);
      Vector shift = Vector::Zero(p);
      if (seed != 0) {
        std::mt19937_64 gen(seed);
        for (Index j = 0; j < p; ++j) shift(j) = unit_double(gen);
      }
      for (Index row = 0; row < count; ++row)
        for (Index j = 0; j < p; ++j) {
          double v = radical_inverse(static_cast<std::uint64_t>(row + 1), primes[static_cast<std::size_t>(j)]) + shift(j);
          out(row, j) = v >= 1.0 ? v - 1.0 : v;
        }
      break;
    }
  }
  return out;
}

SnapshotMatrix generate_synthetic(const ManifoldSpec& spec, const Matrix& params) {
  require(spec.n >= 1, ErrorKind::InvalidArgument, "manifold size n must be >= 1");
  require(spec.intrinsic_dim >= 1, ErrorKind::InvalidArgument, "intrinsic dimension must be >= 1");
  require(spec.intrinsic_dim <= spec.n, ErrorKind::InvalidArgument,
          "intrinsic dimension " + std::to_string(spec.intrinsic_dim) + " exceeds state size " +
              std::to_string(spec.n));
  require(spec.degree >= 0, ErrorKind::InvalidArgument, "nonlinearity degree must be >= 0");
  require(params.rows() >= 1 && params.cols() >= 1, ErrorKind::InvalidArgument, "empty parameter set");

  const Index p = params.cols();
  const Index rstar = spec.intrinsic_dim;
  const int terms = spec.degree <= 1 ? 1 : spec.degree;

  std::mt19937_64 gen(spec.basis_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal(gen);
    return m;
  };

  const Matrix mixing = draw(rstar, p) * (2.0 / std::sqrt(static_cast<double>(p)));
  const Vector offset = draw(spec.n, 1).col(0) * spec.offset_scale;
  std::vector<Matrix> bases;
  for (int k = 0; k < terms; ++k) bases.push_back(draw(spec.n, rstar));

  Matrix states(spec.n, params.rows());
  for (Index c = 0; c < params.rows(); ++c) {
    const Vector g = mixing * (params.row(c).transpose().array() - 0.5).matrix();
    Vector z = offset;
    double coeff = 1.0;
    for (int k = 0; k < terms; ++k) {
      z.noalias() += coeff * bases[static_cast<std::size_t>(k)] * g.array().pow(k + 1).matrix();
      coeff *= spec.warp;
    }
    states.col(c) = z;
  }
  return SnapshotMatrix(std::move(states), params, spec.quantity);
}

TrainTestSplit split_train_test(const SnapshotMatrix& m, double test_fraction, std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, ErrorKind::InvalidArgument,
          "test fraction must lie in (0,1)");
  require(m.kappa() >= 2, ErrorKind::InvalidArgument, "splitting needs at least two columns");
  std::vector<Index> order(static_cast<std::size_t>(m.kappa()));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 gen(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[gen() % (i + 1)]);
  auto n_test = static_cast<Index>(std::llround(test_fraction * static_cast<double>(m.kappa())));
  n_test = std::clamp<Index>(n_test, 1, m.kappa() - 1);
  std::vector<Index> test(order.begin(), order.begin() + n_test);
  std::vector<Index> train(order.begin() + n_test, order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {m.select(train), m.select(test)};
}

namespace {

Matrix read_params_csv(const fs::path& path, Index kappa) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Data, path.string() + ": missing header");
  Index p = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      if (cell != "mu" + std::to_string(p + 1))
        fail(ErrorKind::Data, path.string() + ": header column " + std::to_string(p + 1) + " is '" + cell +
                                  "', expected 'mu" + std::to_string(p + 1) + "'");
      ++p;
    }
  }
  require(p >= 1, ErrorKind::Data, path.string() + ": empty header");
  Matrix params(kappa, p);
  Index row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    require(row < kappa, ErrorKind::ShapeMismatch,
            path.string() + ": more than kappa=" + std::to_string(kappa) + " rows");
    Index col = 0;
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    while (ptr < end && col < p) {
      double v = 0;
      auto [next, ec] = std::from_chars(ptr, end, v);
      if (ec != std::errc())
        fail(ErrorKind::Data, path.string() + ": cannot parse row " + std::to_string(row) + " column " +
                                  std::to_string(col));
      params(row, col++) = v;
      ptr = next;
      while (ptr < end && (*ptr == ',' || *ptr == ' ' || *ptr == '\r')) ++ptr;
    }
    require(col == p, ErrorKind::ShapeMismatch,
            path.string() + ": row " + std::to_string(row) + " has " + std::to_string(col) + " values, expected " +
                std::to_string(p));
    ++row;
  }
  require(row == kappa, ErrorKind::ShapeMismatch,
          path.string() + ": found " + std::to_string(row) + " rows, manifest declares kappa=" +
              std::to_string(kappa));
  return params;
}

}  // namespace

SnapshotMatrix load_dataset(const fs::path& dir, Quantity quantity) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) fail(ErrorKind::Data, "missing manifest: " + manifest_path.string());
  json manifest;
  try {
    std::ifstream in(manifest_path);
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, manifest_path.string() + ": " + e.what());
  }
  try {
    const auto declared = parse_quantity(manifest.at("quantity").get<std::string>());
    require(declared == quantity, ErrorKind::Data,
            "dataset quantity is '" + std::string(to_string(declared)) + "', requested '" +
                std::string(to_string(quantity)) + "'");
    const auto n = manifest.at("n").get<Index>();
    const auto kappa = manifest.at("kappa").get<Index>();
    require(n >= 1 && kappa >= 1, ErrorKind::Data, "manifest n and kappa must be positive");
    const auto dtype = manifest.value("dtype", std::string("f64"));
    require(dtype == "f64" || dtype == "f32", ErrorKind::Data, "unsupported dtype '" + dtype + "'");
    const auto layout = manifest.value("layout", std::string("column-major"));
    require(layout == "column-major", ErrorKind::Data, "unsupported layout '" + layout + "'");
    const auto params_file = manifest.value("params_file", std::string("params.csv"));
    const auto states_file = manifest.value("states_file", std::string("states.bin"));
    const bool components = manifest.value("components", 1) == 6 ||
                            fs::path(states_file).filename() == "states6.bin";
    require(!components || quantity == Quantity::VonMisesStress, ErrorKind::Data,
            "component-stress blocks only apply to the stress quantity");

    Matrix params = read_params_csv(dir / params_file, kappa);
    const auto bytes = io::read_file(dir / states_file);
    const Index rows = components ? 6 * n : n;
    Matrix states = dtype == "f64" ? io::decode_f64(bytes, rows, kappa, states_file)
                                   : io::decode_f32(bytes, rows, kappa, states_file);
    if (auto bad = first_non_finite(states))
      fail(ErrorKind::NonFinite, states_file + ": non-finite value at " + describe_index(*bad, rows));
    if (components) states = von_mises_columns(states);
    return SnapshotMatrix(std::move(states), std::move(params), quantity);
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, manifest_path.string() + ": " + e.what());
  }
}

void write_dataset(const SnapshotMatrix& m, const fs::path& dir, StorageType dtype) {
  io::StagingDirectory staging(dir);
  {
    std::ostringstream csv;
    for (Index j = 0; j < m.p(); ++j) csv << (j ? "," : "") << "mu" << j + 1;
    csv << "\n";
    for (Index i = 0; i < m.kappa(); ++i) {
      for (Index j = 0; j < m.p(); ++j) csv << (j ? "," : "") << io::shortest_repr(m.params()(i, j));
      csv << "\n";
    }
    const auto text = csv.str();
    io::write_file(staging.path() / "params.csv", std::as_bytes(std::span(text.data(), text.size())));
  }
  if (dtype == StorageType::F64) {
    io::write_file(staging.path() / "states.bin", io::encode_f64(m.states()));
  } else {
    const Eigen::MatrixXf f = m.states().cast<float>();
    std::vector<std::byte> bytes(static_cast<std::size_t>(f.size()) * sizeof(float));
    std::memcpy(bytes.data(), f.data(), bytes.size());
    io::write_file(staging.path() / "states.bin", bytes);
  }
  json manifest = {
      {"quantity", std::string(to_string(m.quantity()))},
      {"n", m.n()},
      {"kappa", m.kappa()},
      {"dtype", dtype == StorageType::F64 ? "f64" : "f32"},
      {"layout", "column-major"},
      {"params_file", "params.csv"},
      {"states_file", "states.bin"},
  };
  const auto text = manifest.dump(2) + "\n";
  io::write_file(staging.path() / "manifest.json", std::as_bytes(std::span(text.data(), text.size())));
  staging.commit();
}

std::string dataset_digest(const SnapshotMatrix& m) {
  auto bytes = io::encode_f64(m.states());
  const auto p = io::encode_f64(m.params());
  bytes.insert(bytes.end(), p.begin(), p.end());
  const auto q = to_string(m.quantity());
  for (char c : q) bytes.push_back(static_cast<std::byte>(c));
  return io::sha256_hex(bytes);
}

}  // namespace lrr
