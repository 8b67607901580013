#include "lrr/nn.hpp"

#include <cmath>

namespace lrr::nn {

std::string_view to_string(Activation a) { return a == Activation::Selu ? "selu" : "linear"; }

Activation parse_activation(std::string_view s) {
  if (s == "selu") return Activation::Selu;
  if (s == "linear") return Activation::Linear;
  fail(ErrorKind::InvalidArgument, "unknown activation '" + std::string(s) + "' (expected linear or selu)");
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd") return OptimizerKind::Sgd;
  fail(ErrorKind::InvalidArgument, "unknown optimizer '" + std::string(s) + "' (expected adam or sgd)");
}

Index LayerStack::parameter_count() const {
  Index n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void LayerStack::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    require(l.bias.size() == l.out(), ErrorKind::ShapeMismatch, "layer " + std::to_string(i) + ": bias length != output width");
    if (i > 0)
      require(layers[i - 1].out() == l.in(), ErrorKind::ShapeMismatch,
              "layer " + std::to_string(i) + ": input width " + std::to_string(l.in()) + " != previous output " +
                  std::to_string(layers[i - 1].out()));
    require(l.weights.allFinite() && l.bias.allFinite(), ErrorKind::NonFinite,
            "layer " + std::to_string(i) + " holds non-finite parameters");
  }
}

LayerStack make_stack(Index input_width, const std::vector<Index>& widths, const std::vector<Activation>& activations,
                      std::mt19937_64& gen) {
  require(widths.size() == activations.size(), ErrorKind::InvalidArgument, "one activation per layer required");
  LayerStack stack;
  Index in = input_width;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    require(widths[i] >= 1, ErrorKind::InvalidArgument, "layer widths must be positive");
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    DenseLayer layer;
    layer.weights.resize(widths[i], in);
    for (Index c = 0; c < in; ++c)
      for (Index r = 0; r < widths[i]; ++r) layer.weights(r, c) = normal(gen);
    layer.bias = Vector::Zero(widths[i]);
    layer.activation = activations[i];
    stack.layers.push_back(std::move(layer));
    in = widths[i];
  }
  return stack;
}

namespace {

void activate(Activation a, Matrix& m) {
  if (a == Activation::Selu) m = m.unaryExpr([](double x) { return selu(x); });
}

}  // namespace

ForwardCache forward(const LayerStack& stack, const Eigen::Ref<const Matrix>& x) {
  require(!stack.layers.empty(), ErrorKind::InvalidArgument, "empty layer stack");
  require(x.rows() == stack.input_width(), ErrorKind::ShapeMismatch,
          "forward: input width " + std::to_string(x.rows()) + " != " + std::to_string(stack.input_width()));
  ForwardCache cache;
  cache.owner = &stack;
  cache.version = stack.version;
  cache.inputs.reserve(stack.layers.size());
  cache.preactivations.reserve(stack.layers.size());
  Matrix current = x;
  for (const auto& layer : stack.layers) {
    Matrix pre = layer.weights * current;
    pre.colwise() += layer.bias;
    cache.inputs.push_back(std::move(current));
    current = pre;
    activate(layer.activation, current);
    cache.preactivations.push_back(std::move(pre));
  }
  cache.output = std::move(current);
  return cache;
}

Matrix evaluate(const LayerStack& stack, const Eigen::Ref<const Matrix>& x) {
  require(!stack.layers.empty(), ErrorKind::InvalidArgument, "empty layer stack");
  require(x.rows() == stack.input_width(), ErrorKind::ShapeMismatch,
          "evaluate: input width " + std::to_string(x.rows()) + " != " + std::to_string(stack.input_width()));
  Matrix current = x;
  for (const auto& layer : stack.layers) {
    Matrix pre = layer.weights * current;
    pre.colwise() += layer.bias;
    activate(layer.activation, pre);
    current = std::move(pre);
  }
  return current;
}

Gradients backward(const LayerStack& stack, const ForwardCache& cache, const Eigen::Ref<const Matrix>& output_gradient) {
  require(cache.owner == &stack && cache.version == stack.version &&
              cache.inputs.size() == stack.layers.size(),
          ErrorKind::InvalidArgument, "stale forward cache: parameters changed since the forward pass");
  require(output_gradient.rows() == cache.output.rows() && output_gradient.cols() == cache.output.cols(),
          ErrorKind::ShapeMismatch, "backward: output gradient shape does not match the forward output");
  Gradients grads;
  grads.layers.resize(stack.layers.size());
  Matrix delta = output_gradient;
  for (std::size_t k = stack.layers.size(); k-- > 0;) {
    const auto& layer = stack.layers[k];
    if (layer.activation == Activation::Selu)
      delta.array() *= cache.preactivations[k].unaryExpr([](double x) { return selu_derivative(x); }).array();
    grads.layers[k].weights.noalias() = delta * cache.inputs[k].transpose();
    grads.layers[k].bias = delta.rowwise().sum();
    Matrix next(layer.in(), delta.cols());
    next.noalias() = layer.weights.transpose() * delta;
    delta = std::move(next);
  }
  grads.input = std::move(delta);
  return grads;
}

Vector flatten(const LayerStack& stack) {
  Vector out(stack.parameter_count());
  Index pos = 0;
  for (const auto& l : stack.layers) {
    out.segment(pos, l.weights.size()) = l.weights.reshaped();
    pos += l.weights.size();
    out.segment(pos, l.bias.size()) = l.bias;
    pos += l.bias.size();
  }
  return out;
}

void unflatten(LayerStack& stack, const Eigen::Ref<const Vector>& params) {
  require(params.size() == stack.parameter_count(), ErrorKind::ShapeMismatch, "parameter vector length mismatch");
  Index pos = 0;
  for (auto& l : stack.layers) {
    l.weights.reshaped() = params.segment(pos, l.weights.size());
    pos += l.weights.size();
    l.bias = params.segment(pos, l.bias.size());
    pos += l.bias.size();
  }
  stack.touch();
}

Vector flatten(const Gradients& grads) {
  Index n = 0;
  for (const auto& g : grads.layers) n += g.weights.size() + g.bias.size();
  Vector out(n);
  Index pos = 0;
  for (const auto& g : grads.layers) {
    out.segment(pos, g.weights.size()) = g.weights.reshaped();
    pos += g.weights.size();
    out.segment(pos, g.bias.size()) = g.bias;
    pos += g.bias.size();
  }
  return out;
}

double mse_loss(const Eigen::Ref<const Matrix>& prediction, const Eigen::Ref<const Matrix>& target, Matrix* gradient) {
  require(prediction.rows() == target.rows() && prediction.cols() == target.cols(), ErrorKind::ShapeMismatch,
          "mse: prediction and target shapes differ");
  const double batch = static_cast<double>(prediction.cols());
  const Matrix residual = prediction - target;
  if (gradient) *gradient = (2.0 / batch) * residual;
  return residual.squaredNorm() / batch;
}

Vector gaussian_kl(const Eigen::Ref<const Matrix>& mean, const Eigen::Ref<const Matrix>& log_var) {
  require(mean.rows() == log_var.rows() && mean.cols() == log_var.cols(), ErrorKind::ShapeMismatch,
          "kl: mean and log-variance shapes differ");
  return (-0.5 * (1.0 + log_var.array() - mean.array().square() - log_var.array().exp())).colwise().sum().transpose();
}

void Optimizer::step(LayerStack& stack, const std::vector<LayerGradient>& grads) {
  require(grads.size() == stack.layers.size(), ErrorKind::ShapeMismatch, "gradient/layer count mismatch");
  if (bound_ != &stack || moments_.size() != stack.layers.size()) {
    moments_.clear();
    for (const auto& l : stack.layers)
      moments_.push_back({Matrix::Zero(l.out(), l.in()), Matrix::Zero(l.out(), l.in()), Vector::Zero(l.out()),
                          Vector::Zero(l.out())});
    bound_ = &stack;
    step_ = 0;
  }
  ++step_;
  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t k = 0; k < grads.size(); ++k) {
      stack.layers[k].weights -= lr_ * grads[k].weights;
      stack.layers[k].bias -= lr_ * grads[k].bias;
    }
  } else {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t k = 0; k < grads.size(); ++k) {
      auto& m = moments_[k];
      m.mw = b1 * m.mw + (1 - b1) * grads[k].weights;
      m.vw = b2 * m.vw + (1 - b2) * grads[k].weights.cwiseAbs2();
      m.mb = b1 * m.mb + (1 - b1) * grads[k].bias;
      m.vb = b2 * m.vb + (1 - b2) * grads[k].bias.cwiseAbs2();
      stack.layers[k].weights.array() -= lr_ * (m.mw.array() / c1) / ((m.vw.array() / c2).sqrt() + eps);
      stack.layers[k].bias.array() -= lr_ * (m.mb.array() / c1) / ((m.vb.array() / c2).sqrt() + eps);
    }
  }
  stack.touch();
}

}  // namespace lrr::nn
