#include "lrr/autoencoder.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "lrr/io.hpp"

namespace lrr {

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Architecture Architecture::mirrored(std::vector<Index> widths, std::vector<nn::Activation> activations) {
  require(widths.size() == activations.size(), ErrorKind::InvalidArgument,
          "architecture needs one activation per hidden layer");
  Architecture a;
  a.encoder_widths = widths;
  a.encoder_activations = activations;
  a.decoder_widths.assign(widths.rbegin(), widths.rend());
  a.decoder_activations.assign(activations.rbegin(), activations.rend());
  return a;
}

Architecture Architecture::parse(std::string_view text) {
  const auto colon = text.find(':');
  require(colon != std::string_view::npos, ErrorKind::InvalidArgument,
          "architecture '" + std::string(text) + "' must look like 75x50x40x30:linear,selu,selu,selu");
  std::vector<Index> widths;
  for (const auto& w : split(text.substr(0, colon), 'x')) {
    Index v = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    require(ec == std::errc() && ptr == w.data() + w.size() && v > 0, ErrorKind::InvalidArgument,
            "bad layer width '" + w + "' in architecture");
    widths.push_back(v);
  }
  std::vector<nn::Activation> acts;
  for (const auto& a : split(text.substr(colon + 1), ',')) acts.push_back(nn::parse_activation(a));
  if (acts.size() == 1 && widths.size() > 1) acts.assign(widths.size(), acts.front());
  return mirrored(std::move(widths), std::move(acts));
}

Architecture Architecture::displacement_default() {
  using nn::Activation;
  return mirrored({75, 50, 40, 30}, {Activation::Linear, Activation::Selu, Activation::Selu, Activation::Selu});
}

Architecture Architecture::stress_default() {
  using nn::Activation;
  return mirrored({140, 70, 35}, {Activation::Selu, Activation::Selu, Activation::Selu});
}

std::string Architecture::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < encoder_widths.size(); ++i) os << (i ? "x" : "") << encoder_widths[i];
  os << ":";
  for (std::size_t i = 0; i < encoder_activations.size(); ++i) os << (i ? "," : "") << nn::to_string(encoder_activations[i]);
  return os.str();
}

void TrainConfig::validate() const {
  require(epochs >= 0, ErrorKind::InvalidArgument, "epochs must be >= 0");
  require(batch_size >= 1, ErrorKind::InvalidArgument, "batch size must be >= 1");
  require(learning_rate > 0 && std::isfinite(learning_rate), ErrorKind::InvalidArgument, "learning rate must be positive");
  require(validation_fraction >= 0.0 && validation_fraction < 1.0, ErrorKind::InvalidArgument,
          "validation fraction must lie in [0,1)");
}

InputScaler InputScaler::fit(const Eigen::Ref<const Matrix>& states) {
  InputScaler s;
  s.mean = states.rowwise().mean();
  const Vector var = (states.colwise() - s.mean).rowwise().squaredNorm() / static_cast<double>(states.cols());
  s.scale = var.cwiseMax(1e-12).cwiseSqrt();
  return s;
}

InputScaler InputScaler::identity(Index n) { return {Vector::Zero(n), Vector::Ones(n)}; }

Matrix InputScaler::apply(const Eigen::Ref<const Matrix>& states) const {
  return (states.colwise() - mean).array().colwise() / scale.array();
}

Matrix InputScaler::invert(const Eigen::Ref<const Matrix>& normalized) const {
  Matrix out = normalized.array().colwise() * scale.array();
  out.colwise() += mean;
  return out;
}

AutoencoderModel make_autoencoder(Index n, Index r, const Architecture& arch, bool variational, double beta,
                                  std::uint64_t seed) {
  require(n >= 1 && r >= 1, ErrorKind::InvalidArgument, "autoencoder needs N >= 1 and r >= 1");
  require(beta >= 0.0 && std::isfinite(beta), ErrorKind::InvalidArgument, "beta must be nonnegative");
  AutoencoderModel model;
  model.r = r;
  model.variational = variational;
  model.beta = beta;
  model.architecture = arch;
  model.scaler = InputScaler::identity(n);

  std::mt19937_64 gen(seed);
  auto enc_w = arch.encoder_widths;
  auto enc_a = arch.encoder_activations;
  enc_w.push_back(variational ? 2 * r : r);
  enc_a.push_back(nn::Activation::Linear);
  auto dec_w = arch.decoder_widths;
  auto dec_a = arch.decoder_activations;
  dec_w.push_back(n);
  dec_a.push_back(nn::Activation::Linear);
  model.encoder = nn::make_stack(n, enc_w, enc_a, gen);
  model.decoder = nn::make_stack(r, dec_w, dec_a, gen);
  return model;
}

double ae_loss(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& x,
               std::vector<nn::LayerGradient>* enc_grad, std::vector<nn::LayerGradient>* dec_grad) {
  const auto enc = nn::forward(model.encoder, x);
  const Matrix latent = enc.output.topRows(model.r);
  const auto dec = nn::forward(model.decoder, latent);
  Matrix d_out;
  const double loss = nn::mse_loss(dec.output, x, &d_out);
  if (enc_grad || dec_grad) {
    auto gdec = nn::backward(model.decoder, dec, d_out);
    Matrix d_enc = Matrix::Zero(enc.output.rows(), enc.output.cols());
    d_enc.topRows(model.r) = gdec.input;
    auto genc = nn::backward(model.encoder, enc, d_enc);
    if (enc_grad) *enc_grad = std::move(genc.layers);
    if (dec_grad) *dec_grad = std::move(gdec.layers);
  }
  return loss;
}

double vae_loss(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& noise,
                std::vector<nn::LayerGradient>* enc_grad, std::vector<nn::LayerGradient>* dec_grad) {
  require(model.variational, ErrorKind::InvalidArgument, "vae_loss needs a variational model");
  const Index r = model.r;
  require(noise.rows() == r && noise.cols() == x.cols(), ErrorKind::ShapeMismatch, "noise must be r x batch");
  const auto enc = nn::forward(model.encoder, x);
  const auto mean = enc.output.topRows(r);
  const auto log_var = enc.output.bottomRows(r);
  const Matrix stddev = (0.5 * log_var.array()).exp();
  const Matrix latent = mean + (noise.array() * stddev.array()).matrix();
  const auto dec = nn::forward(model.decoder, latent);
  Matrix d_out;
  const double batch = static_cast<double>(x.cols());
  const double recon = nn::mse_loss(dec.output, x, &d_out);
  const double kl = nn::gaussian_kl(mean, log_var).sum() / batch;
  if (enc_grad || dec_grad) {
    auto gdec = nn::backward(model.decoder, dec, d_out);
    Matrix d_enc(2 * r, x.cols());
    d_enc.topRows(r) = gdec.input + (model.beta / batch) * mean;
    d_enc.bottomRows(r) = (gdec.input.array() * noise.array() * 0.5 * stddev.array()).matrix() +
                          ((model.beta / batch) * 0.5 * (log_var.array().exp() - 1.0)).matrix();
    auto genc = nn::backward(model.encoder, enc, d_enc);
    if (enc_grad) *enc_grad = std::move(genc.layers);
    if (dec_grad) *dec_grad = std::move(gdec.layers);
  }
  return recon + model.beta * kl;
}

namespace {

Matrix gather(const Matrix& x, const std::vector<Index>& idx, std::size_t begin, std::size_t end) {
  Matrix out(x.rows(), static_cast<Index>(end - begin));
  for (std::size_t k = begin; k < end; ++k) out.col(static_cast<Index>(k - begin)) = x.col(idx[k]);
  return out;
}

Matrix draw_noise(std::mt19937_64& gen, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(gen);
  return m;
}

AutoencoderModel train(const Eigen::Ref<const Matrix>& states, Index r, const Architecture& arch, bool variational,
                       double beta, const TrainConfig& cfg) {
  cfg.validate();
  const Index kappa = states.cols();
  AutoencoderModel model = make_autoencoder(states.rows(), r, arch, variational, beta, cfg.seed);
  model.config = cfg;
  model.scaler = InputScaler::fit(states);
  const Matrix x = model.scaler.apply(states);

  std::mt19937_64 gen(cfg.seed + 0x9E3779B97F4A7C15ULL);
  std::vector<Index> order(static_cast<std::size_t>(kappa));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), gen);
  auto n_val = static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(kappa));
  n_val = std::min(n_val, order.size() - 1);
  std::vector<Index> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<Index> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(tr.begin(), tr.end());

  const Matrix x_train = gather(x, tr, 0, tr.size());
  const Matrix x_val = val.empty() ? Matrix() : gather(x, val, 0, val.size());
  std::mt19937_64 eval_gen(cfg.seed + 7);
  const Matrix eval_noise = variational ? draw_noise(eval_gen, r, x_train.cols()) : Matrix();
  const Matrix val_noise = variational && !val.empty() ? draw_noise(eval_gen, r, x_val.cols()) : Matrix();
  auto full_loss = [&](const Matrix& data, const Matrix& noise) {
    return variational ? vae_loss(model, data, noise) : ae_loss(model, data);
  };

  model.history.initial_loss = full_loss(x_train, eval_noise);
  nn::Optimizer enc_opt(cfg.optimizer, cfg.learning_rate);
  nn::Optimizer dec_opt(cfg.optimizer, cfg.learning_rate);
  std::vector<nn::LayerGradient> genc, gdec;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(tr.begin(), tr.end(), gen);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < tr.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const auto e = std::min(tr.size(), b + static_cast<std::size_t>(cfg.batch_size));
      const Matrix xb = gather(x, tr, b, e);
      double loss;
      if (variational) {
        const Matrix noise = draw_noise(gen, r, xb.cols());
        loss = vae_loss(model, xb, noise, &genc, &gdec);
      } else {
        loss = ae_loss(model, xb, &genc, &gdec);
      }
      if (!std::isfinite(loss))
        fail(ErrorKind::Fit, "training loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batches) + " (learning rate " + io::shortest_repr(cfg.learning_rate) +
                                 " is likely too high)");
      enc_opt.step(model.encoder, genc);
      dec_opt.step(model.decoder, gdec);
      sum += loss;
      ++batches;
    }
    model.history.epoch_loss.push_back(sum / static_cast<double>(std::max<std::size_t>(batches, 1)));
    if (!val.empty()) model.history.validation_loss.push_back(full_loss(x_val, val_noise));
  }
  model.history.final_loss = full_loss(x_train, eval_noise);
  require(std::isfinite(model.history.final_loss), ErrorKind::Fit, "final training loss is non-finite");
  return model;
}

}  // namespace

AutoencoderModel ae_fit(const Eigen::Ref<const Matrix>& states, Index r, const Architecture& arch, const TrainConfig& cfg) {
  return train(states, r, arch, false, 0.0, cfg);
}

AutoencoderModel ae_fit(const SnapshotMatrix& m, Index r, const Architecture& arch, const TrainConfig& cfg) {
  return ae_fit(m.states(), r, arch, cfg);
}

AutoencoderModel vae_fit(const Eigen::Ref<const Matrix>& states, Index r, const Architecture& arch, double beta,
                         const TrainConfig& cfg) {
  require(beta >= 0.0, ErrorKind::InvalidArgument, "beta must be nonnegative");
  return train(states, r, arch, true, beta, cfg);
}

AutoencoderModel vae_fit(const SnapshotMatrix& m, Index r, const Architecture& arch, double beta, const TrainConfig& cfg) {
  return vae_fit(m.states(), r, arch, beta, cfg);
}

Matrix ae_reduce(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& z) {
  require(z.rows() == model.n(), ErrorKind::ShapeMismatch,
          "autoencoder reduce: state length " + std::to_string(z.rows()) + " != N=" + std::to_string(model.n()));
  return nn::evaluate(model.encoder, model.scaler.apply(z)).topRows(model.r);
}

Matrix ae_reconstruct(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& zbar) {
  require(zbar.rows() == model.r, ErrorKind::ShapeMismatch,
          "autoencoder reconstruct: reduced length " + std::to_string(zbar.rows()) + " != r=" + std::to_string(model.r));
  return model.scaler.invert(nn::evaluate(model.decoder, zbar));
}

}  // namespace lrr
