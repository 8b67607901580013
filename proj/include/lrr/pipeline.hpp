#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrr/autoencoder.hpp"
#include "lrr/dataset.hpp"
#include "lrr/gp.hpp"
#include "lrr/kpca.hpp"
#include "lrr/metrics.hpp"
#include "lrr/pca.hpp"

namespace lrr {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kContainerVersion = 1;

struct PcaSpec {
  Index r = 10;
};

struct KpcaSpec {
  KpcaOptions options;
};

struct AutoencoderSpec {
  Index r = 10;
  Architecture architecture = Architecture::displacement_default();
  TrainConfig train;
  bool variational = false;
  double beta = 1.0;
};

using ReducerSpec = std::variant<PcaSpec, KpcaSpec, AutoencoderSpec>;

struct GpSpec {
  KernelFunction kernel = KernelFunction::polynomial(1.0, 1.15, 6);
  GpOptions options;
};

using FittedReducer = std::variant<PcaModel, KpcaModel, AutoencoderModel>;

/// Reduction and reconstruction on state columns.
Matrix reduce(const FittedReducer& reducer, const Eigen::Ref<const Matrix>& states);
Matrix reconstruct(const FittedReducer& reducer, const Eigen::Ref<const Matrix>& reduced);
std::string reducer_type(const FittedReducer& reducer);
Index latent_dim(const FittedReducer& reducer);
Index state_dim(const FittedReducer& reducer);

struct SurrogateModel {
  FittedReducer reducer;
  GpModel regressor;
  Quantity quantity = Quantity::Displacement;
  Index n = 0;
  Index r = 0;
  Index kappa = 0;
  nlohmann::json provenance;

  Index p() const { return regressor.p(); }
};

/// Fit the reducer on the snapshots, reduce every training column, then fit
/// the GP from parameters to reduced coordinates.
SurrogateModel offline_fit(const SnapshotMatrix& data, const ReducerSpec& reducer, const GpSpec& gp = {});

struct Prediction {
  Vector reduced;
  Vector state;
  std::vector<std::string> warnings;
};

/// GP prediction followed by reconstruction. Parameters outside [0,1] are
/// extrapolated and flagged in `warnings`.
Prediction online_predict(const SurrogateModel& model, const Eigen::Ref<const Vector>& mu);

struct BatchPrediction {
  Matrix reduced;  // r x B
  Matrix states;   // N x B
};

/// `mus` is B x p.
BatchPrediction online_predict_batch(const SurrogateModel& model, const Eigen::Ref<const Matrix>& mus);

struct EvalOptions {
  bool measure_timing = true;
  int warmup = 3;
  int repeats = 20;
  /// Substitute the exact reduced references for the GP output.
  bool exact_regression = false;
};

struct Evaluation {
  std::vector<ScoreReport> reports;
  ScoreReport summary;
};

Evaluation evaluate_suite(const SurrogateModel& model, const SnapshotMatrix& test, const EvalOptions& options = {});

void save_model(const SurrogateModel& model, const std::filesystem::path& dir);
SurrogateModel load_model(const std::filesystem::path& dir);

nlohmann::json to_json(const ReducerSpec& spec);
ReducerSpec reducer_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GpSpec& spec);
GpSpec gp_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const KernelFunction& k);
KernelFunction kernel_from_json(const nlohmann::json& j);

}  // namespace lrr
