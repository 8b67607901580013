#include <fstream>
#include <map>

#include "lrr/io.hpp"
#include "lrr/pipeline.hpp"

namespace lrr {

using nlohmann::json;

json to_json(const KernelFunction& k) {
  return {{"kind", std::string(to_string(k.kind))}, {"gamma", k.gamma}, {"c0", k.c0}, {"degree", k.degree}};
}

KernelFunction kernel_from_json(const json& j) {
  KernelFunction k;
  k.kind = parse_kernel_kind(j.at("kind").get<std::string>());
  k.gamma = j.at("gamma").get<double>();
  k.c0 = j.at("c0").get<double>();
  k.degree = j.at("degree").get<int>();
  k.validate();
  return k;
}

namespace {

json activations_json(const std::vector<nn::Activation>& acts) {
  json out = json::array();
  for (auto a : acts) out.push_back(std::string(nn::to_string(a)));
  return out;
}

std::vector<nn::Activation> activations_from(const json& j) {
  std::vector<nn::Activation> out;
  for (const auto& a : j) out.push_back(nn::parse_activation(a.get<std::string>()));
  return out;
}

json architecture_json(const Architecture& a) {
  return {{"encoder_widths", a.encoder_widths},
          {"encoder_activations", activations_json(a.encoder_activations)},
          {"decoder_widths", a.decoder_widths},
          {"decoder_activations", activations_json(a.decoder_activations)}};
}

Architecture architecture_from(const json& j) {
  Architecture a;
  a.encoder_widths = j.at("encoder_widths").get<std::vector<Index>>();
  a.encoder_activations = activations_from(j.at("encoder_activations"));
  a.decoder_widths = j.at("decoder_widths").get<std::vector<Index>>();
  a.decoder_activations = activations_from(j.at("decoder_activations"));
  return a;
}

json train_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"seed", c.seed},
          {"optimizer", std::string(nn::to_string(c.optimizer))},
          {"validation_fraction", c.validation_fraction}};
}

TrainConfig train_from(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<Index>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.optimizer = nn::parse_optimizer(j.at("optimizer").get<std::string>());
  c.validation_fraction = j.value("validation_fraction", 0.0);
  return c;
}

}  // namespace

json to_json(const ReducerSpec& spec) {
  if (const auto* s = std::get_if<PcaSpec>(&spec)) return {{"type", "pca"}, {"r", s->r}};
  if (const auto* s = std::get_if<KpcaSpec>(&spec)) {
    json j = {{"type", "kpca"}, {"r", s->options.r}, {"kernel", to_json(s->options.kernel)}, {"ridge", s->options.ridge}};
    if (s->options.preimage_kernel) j["preimage_kernel"] = to_json(*s->options.preimage_kernel);
    return j;
  }
  const auto& s = std::get<AutoencoderSpec>(spec);
  return {{"type", s.variational ? "vae" : "ae"},
          {"r", s.r},
          {"architecture", architecture_json(s.architecture)},
          {"train", train_json(s.train)},
          {"beta", s.beta}};
}

ReducerSpec reducer_spec_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "pca") return PcaSpec{j.at("r").get<Index>()};
  if (type == "kpca") {
    KpcaSpec s;
    s.options.r = j.at("r").get<Index>();
    s.options.kernel = kernel_from_json(j.at("kernel"));
    s.options.ridge = j.at("ridge").get<double>();
    if (j.contains("preimage_kernel")) s.options.preimage_kernel = kernel_from_json(j.at("preimage_kernel"));
    return s;
  }
  if (type == "ae" || type == "vae") {
    AutoencoderSpec s;
    s.r = j.at("r").get<Index>();
    s.architecture = architecture_from(j.at("architecture"));
    s.train = train_from(j.at("train"));
    s.variational = type == "vae";
    s.beta = j.value("beta", 1.0);
    return s;
  }
  fail(ErrorKind::Data, "unknown reducer type '" + type + "'");
}

json to_json(const GpSpec& spec) {
  return {{"kernel", to_json(spec.kernel)},
          {"standardize_targets", spec.options.standardize_targets},
          {"jitter_start", spec.options.jitter_start},
          {"jitter_cap", spec.options.jitter_cap}};
}

GpSpec gp_spec_from_json(const json& j) {
  GpSpec s;
  s.kernel = kernel_from_json(j.at("kernel"));
  s.options.standardize_targets = j.value("standardize_targets", true);
  s.options.jitter_start = j.value("jitter_start", s.options.jitter_start);
  s.options.jitter_cap = j.value("jitter_cap", s.options.jitter_cap);
  return s;
}

namespace {

namespace fs = std::filesystem;

class BlobWriter {
 public:
  explicit BlobWriter(fs::path dir) : dir_(std::move(dir)) {}

  void put(const std::string& name, const Matrix& m) {
    const auto bytes = io::encode_f64(m);
    io::write_file(dir_ / (name + ".f64"), bytes);
    shapes_[name] = {{"rows", m.rows()}, {"cols", m.cols()}};
    sums_[name] = io::sha256_hex(bytes);
  }
  void put(const std::string& name, const Vector& v) { put(name, Matrix(v)); }

  json shapes() const { return shapes_; }
  json sums() const { return sums_; }

 private:
  fs::path dir_;
  json shapes_ = json::object();
  json sums_ = json::object();
};

class BlobReader {
 public:
  BlobReader(fs::path dir, const json& manifest)
      : dir_(std::move(dir)), shapes_(manifest.at("blobs")), sums_(manifest.at("sha256")) {}

  Matrix matrix(const std::string& name) const {
    const auto file = name + ".f64";
    require(shapes_.contains(name) && sums_.contains(name), ErrorKind::Data, "manifest lists no blob '" + file + "'");
    const auto path = dir_ / file;
    require(fs::exists(path), ErrorKind::Data, "missing blob " + path.string());
    const auto bytes = io::read_file(path);
    require(io::sha256_hex(bytes) == sums_.at(name).get<std::string>(), ErrorKind::Checksum,
            "checksum mismatch in " + path.string());
    return io::decode_f64(bytes, shapes_.at(name).at("rows").get<Index>(), shapes_.at(name).at("cols").get<Index>(),
                          path.string());
  }
  Vector vector(const std::string& name) const {
    const Matrix m = matrix(name);
    require(m.cols() == 1, ErrorKind::ShapeMismatch, "blob " + name + ".f64 must be a column vector");
    return m.col(0);
  }

 private:
  fs::path dir_;
  json shapes_;
  json sums_;
};

json write_reducer(const FittedReducer& reducer, BlobWriter& w) {
  if (const auto* m = std::get_if<PcaModel>(&reducer)) {
    w.put("basis", m->basis);
    w.put("mean", m->mean);
    w.put("singular_values", m->singular_values);
    return {{"type", "pca"}, {"warnings", m->warnings}};
  }
  if (const auto* m = std::get_if<KpcaModel>(&reducer)) {
    w.put("training_states", m->training_states);
    w.put("alphas", m->alphas);
    w.put("eigenvalues", m->eigenvalues);
    w.put("gram_row_means", m->gram_row_means);
    w.put("preimage_dual_weights", m->preimage.dual_weights);
    w.put("preimage_training_reduced", m->preimage.training_reduced);
    w.put("preimage_intercept", m->preimage.intercept);
    return {{"type", "kpca"},
            {"kernel", to_json(m->kernel)},
            {"gram_total_mean", m->gram_total_mean},
            {"preimage_kernel", to_json(m->preimage.kernel)},
            {"ridge", m->preimage.ridge}};
  }
  const auto& m = std::get<AutoencoderModel>(reducer);
  auto put_stack = [&](const char* prefix, const nn::LayerStack& s) {
    json acts = json::array();
    for (std::size_t k = 0; k < s.layers.size(); ++k) {
      const auto base = std::string(prefix) + "_" + std::to_string(k);
      w.put(base + "_W", s.layers[k].weights);
      w.put(base + "_b", s.layers[k].bias);
      acts.push_back(std::string(nn::to_string(s.layers[k].activation)));
    }
    return acts;
  };
  json j = {{"type", m.variational ? "vae" : "ae"},
            {"r", m.r},
            {"beta", m.beta},
            {"architecture", architecture_json(m.architecture)},
            {"train", train_json(m.config)},
            {"seed", m.config.seed},
            {"initial_loss", m.history.initial_loss},
            {"final_loss", m.history.final_loss}};
  j["encoder_layers"] = put_stack("enc", m.encoder);
  j["decoder_layers"] = put_stack("dec", m.decoder);
  w.put("scaler_mean", m.scaler.mean);
  w.put("scaler_scale", m.scaler.scale);
  return j;
}

FittedReducer read_reducer(const json& j, const BlobReader& rd) {
  const auto type = j.at("type").get<std::string>();
  if (type == "pca") {
    PcaModel m;
    m.basis = rd.matrix("basis");
    m.mean = rd.vector("mean");
    m.singular_values = rd.vector("singular_values");
    m.warnings = j.value("warnings", std::vector<std::string>{});
    return m;
  }
  if (type == "kpca") {
    KpcaModel m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.training_states = rd.matrix("training_states");
    m.alphas = rd.matrix("alphas");
    m.eigenvalues = rd.vector("eigenvalues");
    m.gram_row_means = rd.vector("gram_row_means");
    m.gram_total_mean = j.at("gram_total_mean").get<double>();
    m.preimage.kernel = kernel_from_json(j.at("preimage_kernel"));
    m.preimage.ridge = j.at("ridge").get<double>();
    m.preimage.dual_weights = rd.matrix("preimage_dual_weights");
    m.preimage.training_reduced = rd.matrix("preimage_training_reduced");
    m.preimage.intercept = rd.vector("preimage_intercept");
    return m;
  }
  require(type == "ae" || type == "vae", ErrorKind::Data, "unknown reducer type '" + type + "' in manifest");
  AutoencoderModel m;
  m.variational = type == "vae";
  m.r = j.at("r").get<Index>();
  m.beta = j.at("beta").get<double>();
  m.architecture = architecture_from(j.at("architecture"));
  m.config = train_from(j.at("train"));
  m.history.initial_loss = j.value("initial_loss", 0.0);
  m.history.final_loss = j.value("final_loss", 0.0);
  auto get_stack = [&](const char* prefix, const json& acts) {
    nn::LayerStack s;
    for (std::size_t k = 0; k < acts.size(); ++k) {
      const auto base = std::string(prefix) + "_" + std::to_string(k);
      nn::DenseLayer layer;
      layer.weights = rd.matrix(base + "_W");
      layer.bias = rd.vector(base + "_b");
      layer.activation = nn::parse_activation(acts[k].get<std::string>());
      s.layers.push_back(std::move(layer));
    }
    s.validate();
    return s;
  };
  m.encoder = get_stack("enc", j.at("encoder_layers"));
  m.decoder = get_stack("dec", j.at("decoder_layers"));
  m.scaler.mean = rd.vector("scaler_mean");
  m.scaler.scale = rd.vector("scaler_scale");
  return m;
}

}  // namespace

void save_model(const SurrogateModel& model, const fs::path& dir) {
  io::StagingDirectory staging(dir);
  BlobWriter w(staging.path());
  json reducer = write_reducer(model.reducer, w);

  const GpModel& gp = model.regressor;
  w.put("gp_inputs", gp.inputs);
  w.put("gp_targets", gp.targets);
  w.put("gp_dual", gp.dual);
  w.put("gp_chol", gp.chol);
  Matrix scaler(gp.r(), 2);
  scaler << gp.target_mean, gp.target_scale;
  w.put("gp_target_scaler", scaler);

  json manifest = {
      {"version", kContainerVersion},
      {"quantity", std::string(to_string(model.quantity))},
      {"n", model.n},
      {"r", model.r},
      {"kappa", model.kappa},
      {"reducer", std::move(reducer)},
      {"regressor", {{"type", "gp"}, {"kernel", to_json(gp.kernel)}, {"jitter", gp.jitter}}},
      {"blobs", w.shapes()},
      {"sha256", w.sums()},
      {"provenance", model.provenance},
  };
  std::ofstream(staging.path() / "manifest.json") << manifest.dump(2) << "\n";
  staging.commit();
}

SurrogateModel load_model(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  require(fs::exists(manifest_path), ErrorKind::Io, "no model container at " + dir.string() + " (manifest.json missing)");
  const auto raw = io::read_file(manifest_path);
  json manifest;
  try {
    manifest = json::parse(reinterpret_cast<const char*>(raw.data()), reinterpret_cast<const char*>(raw.data()) + raw.size());
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, manifest_path.string() + ": " + e.what());
  }
  const auto& version = manifest.at("version");
  const bool version_ok = (version.is_number_integer() && version.get<int>() == kContainerVersion) ||
                          (version.is_string() && version.get<std::string>() == std::to_string(kContainerVersion));
  require(version_ok, ErrorKind::VersionUnsupported,
          "container version " + version.dump() + " is not supported (expected " + std::to_string(kContainerVersion) + ")");

  try {
    const BlobReader rd(dir, manifest);
    SurrogateModel model;
    model.quantity = parse_quantity(manifest.at("quantity").get<std::string>());
    model.n = manifest.at("n").get<Index>();
    model.r = manifest.at("r").get<Index>();
    model.kappa = manifest.at("kappa").get<Index>();
    model.provenance = manifest.value("provenance", json::object());
    model.reducer = read_reducer(manifest.at("reducer"), rd);

    GpModel& gp = model.regressor;
    const auto& reg = manifest.at("regressor");
    gp.kernel = kernel_from_json(reg.at("kernel"));
    gp.jitter = reg.at("jitter").get<double>();
    gp.inputs = rd.matrix("gp_inputs");
    gp.targets = rd.matrix("gp_targets");
    gp.dual = rd.matrix("gp_dual");
    gp.chol = rd.matrix("gp_chol");
    const Matrix scaler = rd.matrix("gp_target_scaler");
    require(scaler.cols() == 2, ErrorKind::ShapeMismatch, "gp_target_scaler.f64 must have two columns");
    gp.target_mean = scaler.col(0);
    gp.target_scale = scaler.col(1);

    require(latent_dim(model.reducer) == model.r && gp.r() == model.r, ErrorKind::Data,
            "manifest r does not match the stored reducer and regressor");
    require(state_dim(model.reducer) == model.n, ErrorKind::Data, "manifest n does not match the stored reducer");
    return model;
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, manifest_path.string() + ": " + e.what());
  }
}

}  // namespace lrr
