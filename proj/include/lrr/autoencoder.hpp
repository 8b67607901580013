#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrr/dataset.hpp"
#include "lrr/nn.hpp"

namespace lrr {

/// Hidden layers of the encoder and decoder. The encoder gets a trailing
/// linear latent layer of width r (2r for the variational head) and the
/// decoder a trailing linear output layer of width N.
struct Architecture {
  std::vector<Index> encoder_widths;
  std::vector<nn::Activation> encoder_activations;
  std::vector<Index> decoder_widths;
  std::vector<nn::Activation> decoder_activations;

  /// "75x50x40x30:linear,selu,selu,selu"; the decoder mirrors both lists.
  static Architecture parse(std::string_view text);
  static Architecture mirrored(std::vector<Index> widths, std::vector<nn::Activation> activations);
  static Architecture displacement_default();
  static Architecture stress_default();

  std::string to_string() const;
};

struct TrainConfig {
  int epochs = 200;
  Index batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  nn::OptimizerKind optimizer = nn::OptimizerKind::Adam;
  double validation_fraction = 0.0;

  void validate() const;
};

struct InputScaler {
  Vector mean;
  Vector scale;

  static InputScaler fit(const Eigen::Ref<const Matrix>& states);
  static InputScaler identity(Index n);
  Matrix apply(const Eigen::Ref<const Matrix>& states) const;
  Matrix invert(const Eigen::Ref<const Matrix>& normalized) const;
};

struct TrainingHistory {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;       // mean minibatch loss per epoch
  std::vector<double> validation_loss;  // per epoch, when a validation split exists
};

struct AutoencoderModel {
  nn::LayerStack encoder;
  nn::LayerStack decoder;
  InputScaler scaler;
  Index r = 0;
  bool variational = false;
  double beta = 1.0;
  Architecture architecture;
  TrainConfig config;
  TrainingHistory history;

  Index n() const { return decoder.output_width(); }
};

/// Untrained model with LeCun-normal weights seeded from `seed`.
AutoencoderModel make_autoencoder(Index n, Index r, const Architecture& arch, bool variational, double beta,
                                  std::uint64_t seed);

/// Losses on already normalized columns. `noise` is r x B for the variational
/// model (the reparameterization draw) and ignored otherwise. Gradients are
/// written when the pointers are non-null.
double ae_loss(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& x,
               std::vector<nn::LayerGradient>* enc_grad = nullptr, std::vector<nn::LayerGradient>* dec_grad = nullptr);
double vae_loss(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& noise,
                std::vector<nn::LayerGradient>* enc_grad = nullptr, std::vector<nn::LayerGradient>* dec_grad = nullptr);

AutoencoderModel ae_fit(const Eigen::Ref<const Matrix>& states, Index r, const Architecture& arch, const TrainConfig& cfg);
AutoencoderModel ae_fit(const SnapshotMatrix& m, Index r, const Architecture& arch, const TrainConfig& cfg);
AutoencoderModel vae_fit(const Eigen::Ref<const Matrix>& states, Index r, const Architecture& arch, double beta,
                         const TrainConfig& cfg);
AutoencoderModel vae_fit(const SnapshotMatrix& m, Index r, const Architecture& arch, double beta, const TrainConfig& cfg);

/// Encoder mean for the columns of z; no sampling.
Matrix ae_reduce(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& z);
Matrix ae_reconstruct(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& zbar);

}  // namespace lrr
