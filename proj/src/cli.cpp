#include "lrr/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lrr/io.hpp"
#include "lrr/pipeline.hpp"
#include "lrr/plot.hpp"
#include "lrr/service.hpp"

namespace lrr::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string> kQuantities{"disp", "stress"};

struct SynthArgs {
  std::string out;
  std::string quantity = "disp";
  Index n = 300;
  Index intrinsic_dim = 5;
  Index p = 5;
  Index count = 200;
  std::string sampling = "uniform";
  int degree = 0;
  double warp = 0.5;
  double test_fraction = 0.0;
  std::string dtype = "f64";
  std::uint64_t seed = 0;
};

struct FitArgs {
  std::string data;
  std::string quantity;
  std::string reducer = "pca";
  std::optional<Index> r;
  std::optional<double> r_threshold;
  std::uint64_t seed = 0;
  std::string out;
  // kpca
  std::string kernel = "poly";
  std::optional<double> gamma, c0, ridge;
  std::optional<int> degree;
  // ae / vae
  std::string arch;
  int epochs = 200;
  Index batch = 32;
  double lr = 1e-3;
  double beta = 1.0;
  std::string optimizer = "adam";
  // gp
  std::string gp_kernel = "poly";
  double gp_gamma = 1.0, gp_c0 = 1.15;
  int gp_degree = 6;
};

struct PredictArgs {
  std::string model;
  std::string mu;
  std::string format = "json";
  std::string out_state;
};

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string summary;
  std::string plot;
  std::string timing = "on";
  bool exact_regression = false;
  int repeats = 20;
};

struct ScoreArgs {
  std::string in;
  std::string plot;
  std::string title = "Performance scores";
};

struct ServeArgs {
  std::string model_disp, model_stress, geometry, ui_dir;
  std::string bind = "127.0.0.1:8080";
};

struct InspectArgs {
  std::string model;
  std::string data;
  std::string quantity = "disp";
};

Vector parse_mu(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    require(ec == std::errc() && ptr == end, ErrorKind::InvalidArgument, "--mu: cannot parse '" + cell + "'");
    values.push_back(v);
  }
  require(!values.empty(), ErrorKind::InvalidArgument, "--mu needs comma-separated values");
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

KernelFunction make_kernel(const std::string& kind, double gamma, double c0, int degree) {
  KernelFunction k{parse_kernel_kind(kind), gamma, c0, degree};
  k.validate();
  return k;
}

ReducerSpec reducer_spec(const FitArgs& a, Quantity q, const SnapshotMatrix& data) {
  const bool disp = q == Quantity::Displacement;
  Index r = a.r.value_or(disp ? 10 : 13);
  if (a.reducer == "pca") {
    if (a.r_threshold) r = select_rank(data.states(), *a.r_threshold);
    return PcaSpec{r};
  }
  if (a.reducer == "kpca") {
    KpcaSpec s;
    s.options.r = r;
    s.options.kernel = make_kernel(a.kernel, a.gamma.value_or(disp ? 1e-10 : 1e-6), a.c0.value_or(disp ? 452.0 : 276.0),
                                   a.degree.value_or(6));
    s.options.ridge = a.ridge.value_or(disp ? 1e9 : 1e6);
    return s;
  }
  AutoencoderSpec s;
  s.r = r;
  s.variational = a.reducer == "vae";
  s.beta = a.beta;
  s.architecture = a.arch.empty() ? (disp ? Architecture::displacement_default() : Architecture::stress_default())
                                  : Architecture::parse(a.arch);
  s.train.epochs = a.epochs;
  s.train.batch_size = a.batch;
  s.train.learning_rate = a.lr;
  s.train.seed = a.seed;
  s.train.optimizer = nn::parse_optimizer(a.optimizer);
  s.train.validate();
  return s;
}

int cmd_synth(const SynthArgs& a) {
  const Matrix params = sample_parameters(a.p, a.count, parse_sampling_strategy(a.sampling), a.seed);
  ManifoldSpec spec;
  spec.n = a.n;
  spec.intrinsic_dim = a.intrinsic_dim;
  spec.basis_seed = a.seed + 1;
  spec.degree = a.degree;
  spec.warp = a.warp;
  spec.quantity = parse_quantity(a.quantity);
  const auto data = generate_synthetic(spec, params);
  const auto dtype = a.dtype == "f32" ? StorageType::F32 : StorageType::F64;
  if (a.test_fraction > 0.0) {
    const auto split = split_train_test(data, a.test_fraction, a.seed);
    fs::create_directories(a.out);
    write_dataset(split.train, fs::path(a.out) / "train", dtype);
    write_dataset(split.test, fs::path(a.out) / "test", dtype);
    std::cout << "wrote " << split.train.kappa() << " training and " << split.test.kappa() << " test snapshots to "
              << a.out << "\n";
  } else {
    write_dataset(data, a.out, dtype);
    std::cout << "wrote " << data.kappa() << " snapshots to " << a.out << "\n";
  }
  return 0;
}

int cmd_fit(const FitArgs& a) {
  const Quantity q = parse_quantity(a.quantity);
  const auto data = load_dataset(a.data, q);
  const auto spec = reducer_spec(a, q, data);
  GpSpec gp;
  gp.kernel = make_kernel(a.gp_kernel, a.gp_gamma, a.gp_c0, a.gp_degree);
  auto model = offline_fit(data, spec, gp);
  model.provenance["seed"] = a.seed;
  save_model(model, a.out);
  std::cout << "fitted " << reducer_type(model.reducer) << "+gp surrogate (r=" << model.r << ", kappa=" << model.kappa
            << ") -> " << a.out << "\n";
  return 0;
}

int cmd_predict(const PredictArgs& a) {
  const auto model = load_model(a.model);
  const Vector mu = parse_mu(a.mu);
  require(mu.size() == model.p(), ErrorKind::InvalidArgument,
          "--mu has " + std::to_string(mu.size()) + " values, the model expects " + std::to_string(model.p()));
  const auto pred = online_predict(model, mu);
  for (const auto& w : pred.warnings) std::cerr << "warning: " << w << "\n";
  if (!a.out_state.empty()) io::write_file_atomic(a.out_state, io::encode_f64(pred.state));
  if (a.format == "csv") {
    std::cout << "component,value\n";
    for (Index l = 0; l < pred.reduced.size(); ++l) std::cout << "reduced" << l << "," << io::shortest_repr(pred.reduced(l)) << "\n";
    std::cout << "state_min," << io::shortest_repr(pred.state.minCoeff()) << "\n";
    std::cout << "state_max," << io::shortest_repr(pred.state.maxCoeff()) << "\n";
    std::cout << "state_mean," << io::shortest_repr(pred.state.mean()) << "\n";
    return 0;
  }
  json out = {{"quantity", std::string(to_string(model.quantity))},
              {"reduced", std::vector<double>(pred.reduced.data(), pred.reduced.data() + pred.reduced.size())},
              {"state_stats", {{"min", pred.state.minCoeff()}, {"max", pred.state.maxCoeff()}, {"mean", pred.state.mean()}}},
              {"warnings", pred.warnings}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const auto model = load_model(a.model);
  const auto test = load_dataset(a.data, model.quantity);
  EvalOptions opts;
  opts.measure_timing = a.timing == "on";
  opts.repeats = a.repeats;
  opts.exact_regression = a.exact_regression;
  const auto ev = evaluate_suite(model, test, opts);
  const auto csv = to_csv(ev.reports);
  if (a.out.empty())
    std::cout << csv;
  else
    io::write_text_atomic(a.out, csv);
  const auto summary = summary_json(ev.reports);
  if (!a.summary.empty()) io::write_text_atomic(a.summary, summary);
  if (!a.plot.empty())
    io::write_text_atomic(a.plot, score_boxplot_svg(ev.reports, reducer_type(model.reducer) + "+gp, " +
                                                                    std::string(to_string(model.quantity))));
  if (!a.out.empty()) std::cout << summary;
  return 0;
}

int cmd_score(const ScoreArgs& a) {
  const auto bytes = io::read_file(a.in);
  const auto reports = parse_score_csv(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  require(!reports.empty(), ErrorKind::Data, a.in + " holds no score rows");
  std::cout << summary_json(reports);
  if (!a.plot.empty()) io::write_text_atomic(a.plot, score_boxplot_svg(reports, a.title));
  return 0;
}

int cmd_serve(const ServeArgs& a) {
  auto state = std::make_shared<ServiceState>();
  if (!a.model_disp.empty()) state->load(load_model(a.model_disp));
  if (!a.model_stress.empty()) state->load(load_model(a.model_stress));
  if (!a.geometry.empty()) {
    const auto bytes = io::read_file(a.geometry);
    require(bytes.size() % (3 * sizeof(double)) == 0, ErrorKind::ShapeMismatch,
            a.geometry + " must hold 3 float64 values per node");
    const auto nodes = static_cast<Index>(bytes.size() / (3 * sizeof(double)));
    state->set_geometry(io::decode_f64(bytes, 3, nodes, a.geometry).transpose());
  }
  const auto [host, port] = parse_bind_address(a.bind);
  std::optional<fs::path> ui;
  if (!a.ui_dir.empty()) ui = a.ui_dir;
  HttpServer server(state, ui);
  const int bound = server.bind(host, port);
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  server.listen();
  return 0;
}

int cmd_inspect(const InspectArgs& a) {
  require(a.model.empty() != a.data.empty(), ErrorKind::InvalidArgument, "inspect needs exactly one of --model or --data");
  if (!a.model.empty()) {
    const auto model = load_model(a.model);
    json out = {{"quantity", std::string(to_string(model.quantity))},
                {"reducer", reducer_type(model.reducer)},
                {"n", model.n},
                {"r", model.r},
                {"kappa", model.kappa},
                {"p", model.p()},
                {"gp_kernel", describe(model.regressor.kernel)},
                {"gp_jitter", model.regressor.jitter},
                {"provenance", model.provenance}};
    if (const auto* pca = std::get_if<PcaModel>(&model.reducer)) {
      const Vector s = scaled_singular_values(*pca);
      out["scaled_singular_values"] = std::vector<double>(s.data(), s.data() + s.size());
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  const auto data = load_dataset(a.data, parse_quantity(a.quantity));
  json out = {{"quantity", std::string(to_string(data.quantity()))},
              {"n", data.n()},
              {"kappa", data.kappa()},
              {"p", data.p()},
              {"sha256", dataset_digest(data)},
              {"state_min", data.states().minCoeff()},
              {"state_max", data.states().maxCoeff()}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return 2;
    case ErrorKind::Fit: return 4;
    default: return 3;
  }
}

void report(std::string_view category, const std::string& message) {
  std::string flat = message;
  for (auto& c : flat)
    if (c == '\n') c = ' ';
  std::cerr << "error: category=" << category << " message=" << flat << std::endl;
}

void apply_thread_cap() {
  if (const char* env = std::getenv("LRR_THREADS")) {
    int n = 0;
    const std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc() && n >= 1) Eigen::setNbThreads(n);
  }
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Reduced-order surrogates: reduce simulation snapshots, regress reduced states, predict"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic snapshot dataset");
  s->add_option("--out", synth.out, "Output dataset directory")->required();
  s->add_option("--quantity", synth.quantity, "disp or stress")->check(CLI::IsMember(kQuantities))->capture_default_str();
  s->add_option("--n", synth.n, "State length N")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--intrinsic-dim", synth.intrinsic_dim, "Intrinsic manifold dimension")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--p", synth.p, "Parameter dimension")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--count", synth.count, "Number of snapshots")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--sampling", synth.sampling, "grid, uniform, halton or sobol")
      ->check(CLI::IsMember({"grid", "uniform", "halton", "sobol"}))
      ->capture_default_str();
  s->add_option("--degree", synth.degree, "0 or 1 for a linear manifold, >1 for polynomial curvature")
      ->check(CLI::Range(0, 8))
      ->capture_default_str();
  s->add_option("--warp", synth.warp, "Weight decay of higher-order terms")->capture_default_str();
  s->add_option("--test-fraction", synth.test_fraction, "Write train/ and test/ subdirectories")
      ->check(CLI::Range(0.0, 0.9))
      ->capture_default_str();
  s->add_option("--dtype", synth.dtype, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}))->capture_default_str();
  s->add_option("--seed", synth.seed, "Seed for parameters, basis and split")->capture_default_str();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit reducer and GP regressor, write a model container");
  f->add_option("--data", fit.data, "Training dataset directory")->required()->check(CLI::ExistingDirectory);
  f->add_option("--quantity", fit.quantity, "disp or stress")->required()->check(CLI::IsMember(kQuantities));
  f->add_option("--reducer", fit.reducer, "pca, kpca, ae or vae")
      ->check(CLI::IsMember({"pca", "kpca", "ae", "vae"}))
      ->capture_default_str();
  f->add_option("--r", fit.r, "Reduced dimension (default 10 for disp, 13 for stress)")->check(CLI::PositiveNumber);
  f->add_option("--r-threshold", fit.r_threshold, "PCA only: smallest r whose training reconstruction score reaches this")
      ->check(CLI::Range(0.0, 1.0))
      ->excludes("--r");
  f->add_option("--seed", fit.seed, "Seed for network initialization and batching")->capture_default_str();
  f->add_option("--out", fit.out, "Output model container directory")->required();
  f->add_option("--kernel", fit.kernel, "KPCA kernel: poly, rbf or linear")
      ->check(CLI::IsMember({"poly", "rbf", "linear"}))
      ->capture_default_str();
  f->add_option("--gamma", fit.gamma, "KPCA kernel scale (default 1e-10 disp, 1e-6 stress)");
  f->add_option("--c0", fit.c0, "KPCA polynomial offset (default 452 disp, 276 stress)");
  f->add_option("--degree", fit.degree, "KPCA polynomial degree (default 6)")->check(CLI::PositiveNumber);
  f->add_option("--ridge", fit.ridge, "KPCA preimage ridge (default 1e9 disp, 1e6 stress)")->check(CLI::PositiveNumber);
  f->add_option("--arch", fit.arch, "Hidden layers, e.g. 75x50x40x30:linear,selu,selu,selu (decoder mirrored)");
  f->add_option("--epochs", fit.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
  f->add_option("--batch", fit.batch, "Minibatch size")->check(CLI::PositiveNumber)->capture_default_str();
  f->add_option("--lr", fit.lr, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  f->add_option("--beta", fit.beta, "VAE KL weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  f->add_option("--optimizer", fit.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}))->capture_default_str();
  f->add_option("--gp-kernel", fit.gp_kernel, "GP kernel: poly, rbf or linear")
      ->check(CLI::IsMember({"poly", "rbf", "linear"}))
      ->capture_default_str();
  f->add_option("--gp-gamma", fit.gp_gamma, "GP kernel scale")->capture_default_str();
  f->add_option("--gp-c0", fit.gp_c0, "GP polynomial offset")->capture_default_str();
  f->add_option("--gp-degree", fit.gp_degree, "GP polynomial degree")->check(CLI::PositiveNumber)->capture_default_str();

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "Predict one state from an activation vector");
  p->add_option("--model", predict.model, "Model container directory")->required()->check(CLI::ExistingDirectory);
  p->add_option("--mu", predict.mu, "Comma-separated parameters")->required();
  p->add_option("--format", predict.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  p->add_option("--out-state", predict.out_state, "Write the full state as raw float64");

  EvaluateArgs evaluate;
  auto* e = app.add_subcommand("evaluate", "Score a model on a test dataset");
  e->add_option("--model", evaluate.model, "Model container directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--data", evaluate.data, "Test dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--out", evaluate.out, "Per-simulation score CSV (stdout when omitted)");
  e->add_option("--summary", evaluate.summary, "JSON summary of mean scores");
  e->add_option("--plot", evaluate.plot, "SVG boxplot of the scores");
  e->add_option("--timing", evaluate.timing, "on or off; off writes delta_t_ms = 0 for reproducible CSVs")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  e->add_option("--repeats", evaluate.repeats, "Timed predictions per simulation")->check(CLI::PositiveNumber)->capture_default_str();
  e->add_flag("--exact-regression", evaluate.exact_regression, "Use exact reduced references in place of the GP output");

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "Summarize a score CSV and optionally plot it");
  sc->add_option("--in", score.in, "Score CSV")->required()->check(CLI::ExistingFile);
  sc->add_option("--plot", score.plot, "SVG boxplot output");
  sc->add_option("--title", score.title, "Plot title")->capture_default_str();

  ServeArgs serve;
  auto* sv = app.add_subcommand("serve", "Serve predictions over HTTP");
  sv->add_option("--model-disp", serve.model_disp, "Displacement model container")->check(CLI::ExistingDirectory);
  sv->add_option("--model-stress", serve.model_stress, "Stress model container")->check(CLI::ExistingDirectory);
  sv->add_option("--geometry", serve.geometry, "Rest coordinates, raw float64 x,y,z per node")->check(CLI::ExistingFile);
  sv->add_option("--ui-dir", serve.ui_dir, "Static files served at /")->check(CLI::ExistingDirectory);
  sv->add_option("--bind", serve.bind, "host:port")->capture_default_str();

  InspectArgs inspect;
  auto* in = app.add_subcommand("inspect", "Describe a model container or dataset");
  in->add_option("--model", inspect.model, "Model container directory")->check(CLI::ExistingDirectory);
  in->add_option("--data", inspect.data, "Dataset directory")->check(CLI::ExistingDirectory);
  in->add_option("--quantity", inspect.quantity, "Dataset quantity")->check(CLI::IsMember(kQuantities))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.what());
    return 2;
  }

  apply_thread_cap();
  try {
    if (*s) return cmd_synth(synth);
    if (*f) return cmd_fit(fit);
    if (*p) return cmd_predict(predict);
    if (*e) return cmd_evaluate(evaluate);
    if (*sc) return cmd_score(score);
    if (*sv) return cmd_serve(serve);
    if (*in) return cmd_inspect(inspect);
  } catch (const Error& err) {
    report(to_string(err.kind()), err.what());
    return exit_code(err.kind());
  } catch (const std::exception& err) {
    report("internal", err.what());
    return 1;
  }
  return 1;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"lrr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace lrr::cli
