#include "lrr/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <chrono>
#include <ctime>

#include "lrr/io.hpp"

namespace lrr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Re-throws submodule errors with the pipeline stage that raised them.
template <typename F>
auto staged(const char* stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(stage) + ": " + e.what());
  }
}

}  // namespace

Matrix reduce(const FittedReducer& reducer, const Eigen::Ref<const Matrix>& states) {
  return std::visit(overloaded{
                        [&](const PcaModel& m) { return pca_reduce(m, states); },
                        [&](const KpcaModel& m) { return kpca_reduce(m, states); },
                        [&](const AutoencoderModel& m) { return ae_reduce(m, states); },
                    },
                    reducer);
}

Matrix reconstruct(const FittedReducer& reducer, const Eigen::Ref<const Matrix>& reduced) {
  return std::visit(overloaded{
                        [&](const PcaModel& m) { return pca_reconstruct(m, reduced); },
                        [&](const KpcaModel& m) { return kpca_reconstruct(m, reduced); },
                        [&](const AutoencoderModel& m) { return ae_reconstruct(m, reduced); },
                    },
                    reducer);
}

std::string reducer_type(const FittedReducer& reducer) {
  return std::visit(overloaded{
                        [](const PcaModel&) { return std::string("pca"); },
                        [](const KpcaModel&) { return std::string("kpca"); },
                        [](const AutoencoderModel& m) { return std::string(m.variational ? "vae" : "ae"); },
                    },
                    reducer);
}

Index latent_dim(const FittedReducer& reducer) {
  return std::visit(overloaded{
                        [](const PcaModel& m) { return m.r(); },
                        [](const KpcaModel& m) { return m.r(); },
                        [](const AutoencoderModel& m) { return m.r; },
                    },
                    reducer);
}

Index state_dim(const FittedReducer& reducer) {
  return std::visit(overloaded{
                        [](const PcaModel& m) { return m.n(); },
                        [](const KpcaModel& m) { return m.n(); },
                        [](const AutoencoderModel& m) { return m.n(); },
                    },
                    reducer);
}

SurrogateModel offline_fit(const SnapshotMatrix& data, const ReducerSpec& spec, const GpSpec& gp) {
  SurrogateModel model;
  const auto started = utc_timestamp();
  model.reducer = staged("reducer fit", [&]() -> FittedReducer {
    return std::visit(overloaded{
                          [&](const PcaSpec& s) -> FittedReducer { return pca_fit(data, s.r); },
                          [&](const KpcaSpec& s) -> FittedReducer { return kpca_fit(data, s.options); },
                          [&](const AutoencoderSpec& s) -> FittedReducer {
                            return s.variational ? vae_fit(data, s.r, s.architecture, s.beta, s.train)
                                                 : ae_fit(data, s.r, s.architecture, s.train);
                          },
                      },
                      spec);
  });
  const Matrix reduced = staged("regression dataset", [&] { return reduce(model.reducer, data.states()); });
  model.regressor = staged("regressor fit", [&] { return gp_fit(data.params(), reduced.transpose(), gp.kernel, gp.options); });
  model.quantity = data.quantity();
  model.n = data.n();
  model.r = latent_dim(model.reducer);
  model.kappa = data.kappa();

  nlohmann::json prov = {
      {"toolkit_version", kToolkitVersion},
      {"dataset_sha256", dataset_digest(data)},
      {"reducer_spec", to_json(spec)},
      {"gp_spec", to_json(gp)},
      {"gp_jitter", model.regressor.jitter},
      {"fit_started", started},
      {"fit_finished", utc_timestamp()},
  };
  if (const auto* pca = std::get_if<PcaModel>(&model.reducer); pca && !pca->warnings.empty())
    prov["warnings"] = pca->warnings;
  if (const auto* ae = std::get_if<AutoencoderModel>(&model.reducer)) {
    prov["seed"] = ae->config.seed;
    prov["optimizer"] = std::string(nn::to_string(ae->config.optimizer));
    prov["initial_loss"] = ae->history.initial_loss;
    prov["final_loss"] = ae->history.final_loss;
  }
  model.provenance = std::move(prov);
  return model;
}

namespace {

std::vector<std::string> range_warnings(const Eigen::Ref<const Vector>& mu) {
  std::vector<std::string> out;
  for (Index j = 0; j < mu.size(); ++j)
    if (!(mu(j) >= 0.0 && mu(j) <= 1.0))
      out.push_back("mu[" + std::to_string(j) + "] = " + io::shortest_repr(mu(j)) + " lies outside [0,1]; extrapolating");
  return out;
}

}  // namespace

Prediction online_predict(const SurrogateModel& model, const Eigen::Ref<const Vector>& mu) {
  require(mu.size() == model.p(), ErrorKind::ShapeMismatch,
          "mu has length " + std::to_string(mu.size()) + ", expected " + std::to_string(model.p()));
  require(mu.allFinite(), ErrorKind::NonFinite, "mu must be finite");
  Prediction out;
  out.warnings = range_warnings(mu);
  out.reduced = gp_predict(model.regressor, mu).mean;
  out.state = reconstruct(model.reducer, out.reduced).col(0);
  return out;
}

BatchPrediction online_predict_batch(const SurrogateModel& model, const Eigen::Ref<const Matrix>& mus) {
  require(mus.cols() == model.p(), ErrorKind::ShapeMismatch,
          "mu batch has " + std::to_string(mus.cols()) + " columns, expected " + std::to_string(model.p()));
  require(mus.allFinite(), ErrorKind::NonFinite, "mu must be finite");
  BatchPrediction out;
  out.reduced = gp_predict_batch(model.regressor, mus).transpose();
  out.states = reconstruct(model.reducer, out.reduced);
  return out;
}

Evaluation evaluate_suite(const SurrogateModel& model, const SnapshotMatrix& test, const EvalOptions& options) {
  require(test.quantity() == model.quantity, ErrorKind::Data,
          "test data quantity '" + std::string(to_string(test.quantity())) + "' does not match the model's '" +
              std::string(to_string(model.quantity)) + "'");
  require(test.n() == model.n, ErrorKind::ShapeMismatch,
          "test states have N=" + std::to_string(test.n()) + ", model expects " + std::to_string(model.n));
  require(test.p() == model.p(), ErrorKind::ShapeMismatch, "test parameters have the wrong dimension");

  const Matrix& z = test.states();
  const Matrix reduced_ref = reduce(model.reducer, z);
  const Matrix reconstructed = reconstruct(model.reducer, reduced_ref);
  const Matrix regressed = options.exact_regression ? reduced_ref : Matrix(gp_predict_batch(model.regressor, test.params()).transpose());
  const Matrix approximated = reconstruct(model.reducer, regressed);
  const Index block = block_size(model.quantity);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  Evaluation ev;
  ev.reports.reserve(static_cast<std::size_t>(test.kappa()));
  for (Index c = 0; c < test.kappa(); ++c) {
    ScoreReport r;
    r.sim_id = std::to_string(c);
    const bool state_ok = z.col(c).norm() > 0.0;
    r.s_rec = state_ok ? score(z.col(c), reconstructed.col(c)) : nan;
    r.s_regr = reduced_ref.col(c).norm() > 0.0 ? score(reduced_ref.col(c), regressed.col(c)) : nan;
    r.s_appr = state_ok ? score(z.col(c), approximated.col(c)) : nan;
    const auto e2 = aggregate(nodewise_error(z.col(c), approximated.col(c), block));
    r.e2_mean = e2.mean;
    r.e2_max = e2.max;
    if (options.measure_timing) {
      const Vector mu = test.params().row(c).transpose();
      for (int w = 0; w < options.warmup; ++w) (void)online_predict(model, mu);
      std::vector<double> times;
      for (int k = 0; k < std::max(options.repeats, 1); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto pred = online_predict(model, mu);
        const auto t1 = std::chrono::steady_clock::now();
        (void)pred;
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      std::sort(times.begin(), times.end());
      r.delta_t_ms = quantile_sorted(times, 0.5);
    }
    ev.reports.push_back(std::move(r));
  }
  ev.summary = mean_scores(ev.reports);
  return ev;
}

}  // namespace lrr
