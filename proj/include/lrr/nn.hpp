#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lrr/types.hpp"

namespace lrr::nn {

// Three-decimal SELU constants, deliberately not the 1.0507/1.6733 pair.
inline constexpr double kSeluScale = 1.051;
inline constexpr double kSeluAlpha = 1.673;

enum class Activation { Linear, Selu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);

template <typename Scalar>
Scalar selu(Scalar x) {
  using std::exp;
  return x >= Scalar(0) ? Scalar(kSeluScale) * x : Scalar(kSeluScale * kSeluAlpha) * (exp(x) - Scalar(1));
}

template <typename Scalar>
Scalar selu_derivative(Scalar x) {
  using std::exp;
  return x >= Scalar(0) ? Scalar(kSeluScale) : Scalar(kSeluScale * kSeluAlpha) * exp(x);
}

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Linear;

  Index in() const { return weights.cols(); }
  Index out() const { return weights.rows(); }
};

/// Sequential fully-connected layers. `version` changes whenever parameters
/// are mutated through the stack, which invalidates outstanding caches.
struct LayerStack {
  std::vector<DenseLayer> layers;
  std::uint64_t version = 0;

  Index input_width() const { return layers.empty() ? 0 : layers.front().in(); }
  Index output_width() const { return layers.empty() ? 0 : layers.back().out(); }
  Index parameter_count() const;
  void touch() { ++version; }
  void validate() const;
};

/// LeCun-normal weights (variance 1/fan_in), zero biases.
LayerStack make_stack(Index input_width, const std::vector<Index>& widths, const std::vector<Activation>& activations,
                      std::mt19937_64& gen);

struct ForwardCache {
  const LayerStack* owner = nullptr;
  std::uint64_t version = 0;
  std::vector<Matrix> inputs;          // per layer, in x B
  std::vector<Matrix> preactivations;  // per layer, out x B
  Matrix output;
};

/// Columns of `x` are samples.
ForwardCache forward(const LayerStack& stack, const Eigen::Ref<const Matrix>& x);
/// Output only, no cache.
Matrix evaluate(const LayerStack& stack, const Eigen::Ref<const Matrix>& x);

struct LayerGradient {
  Matrix weights;
  Vector bias;
};

struct Gradients {
  std::vector<LayerGradient> layers;
  Matrix input;  // dL/dx
};

Gradients backward(const LayerStack& stack, const ForwardCache& cache, const Eigen::Ref<const Matrix>& output_gradient);

/// Parameters in layer order, weights (column-major) then bias.
Vector flatten(const LayerStack& stack);
void unflatten(LayerStack& stack, const Eigen::Ref<const Vector>& params);
Vector flatten(const Gradients& grads);

/// Mean over samples of the squared 2-norm of the residual; gradient 2/B (pred - target).
double mse_loss(const Eigen::Ref<const Matrix>& prediction, const Eigen::Ref<const Matrix>& target,
                Matrix* gradient = nullptr);

/// KL(N(mean, exp(log_var)) || N(0, I)) per column: -1/2 sum(1 + log_var - mean^2 - exp(log_var)).
Vector gaussian_kl(const Eigen::Ref<const Matrix>& mean, const Eigen::Ref<const Matrix>& log_var);

enum class OptimizerKind { Sgd, Adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {}
  void step(LayerStack& stack, const std::vector<LayerGradient>& grads);

 private:
  struct Moments {
    Matrix mw, vw;
    Vector mb, vb;
  };
  OptimizerKind kind_;
  double lr_;
  std::vector<Moments> moments_;
  const LayerStack* bound_ = nullptr;
  long step_ = 0;
};

}  // namespace lrr::nn
