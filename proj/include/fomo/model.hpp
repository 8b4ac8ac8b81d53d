#ifndef FOMO_MODEL_HPP
#define FOMO_MODEL_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "fomo/random.hpp"
#include "fomo/tensor.hpp"

namespace fomo {

/// Uniform fan-in bound used for weight initialisation and re-initialisation.
inline double init_bound(Index fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

/// One draw from the initialisation distribution of a parameter entry:
/// weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)), biases = 0.
template <typename Scalar>
Scalar sample_init(bool is_bias, Index fan_in, Rng& rng) {
  if (is_bias) return Scalar(0);
  const double bound = init_bound(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  return static_cast<Scalar>(dist(rng));
}

/// Multi-layer perceptron: affine + ReLU on every layer except the last.
///
/// Parameters are enumerated by layer index ascending, weight before bias:
/// W0, b0, W1, b1, ... Masks, the stable copy, optimizer state and
/// checkpoints all rely on this order.
template <typename Scalar>
class Mlp {
 public:
  struct Layer {
    Tensor<Scalar> weight;  // d_in x d_out
    Tensor<Scalar> bias;    // d_out
  };

  Mlp() = default;

  explicit Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ConfigError("model needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.size() != l.weight.cols()) {
        throw DimensionError("layer " + std::to_string(i) + ": W " + shape_string(l.weight.shape()) +
                             ", b " + shape_string(l.bias.shape()));
      }
      if (i > 0 && layers_[i - 1].weight.cols() != l.weight.rows()) {
        throw DimensionError("layer " + std::to_string(i) + " input width " +
                             std::to_string(l.weight.rows()) + " does not chain with previous output " +
                             std::to_string(layers_[i - 1].weight.cols()));
      }
    }
  }

  /// widths = {d_in, hidden..., K}
  static Mlp init(const std::vector<Index>& widths, Rng& rng, bool requires_grad = true) {
    if (widths.size() < 2) throw ConfigError("layer spec needs an input and an output width");
    for (Index w : widths) {
      if (w <= 0) throw ConfigError("layer widths must be positive");
    }
    std::vector<Layer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      Matrix<Scalar> w(widths[i], widths[i + 1]);
      for (Index r = 0; r < w.rows(); ++r)
        for (Index c = 0; c < w.cols(); ++c) w(r, c) = sample_init<Scalar>(false, widths[i], rng);
      layers.push_back(Layer{Tensor<Scalar>(std::move(w), requires_grad),
                             Tensor<Scalar>::zeros(Shape{widths[i + 1]}, requires_grad)});
    }
    return Mlp(std::move(layers));
  }

  std::size_t layer_count() const { return layers_.size(); }
  Index input_dim() const { return layers_.front().weight.rows(); }
  Index num_classes() const { return layers_.back().weight.cols(); }

  std::vector<Index> widths() const {
    std::vector<Index> w{input_dim()};
    for (const auto& l : layers_) w.push_back(l.weight.cols());
    return w;
  }

  const std::vector<Layer>& layers() const { return layers_; }

  /// Handles sharing storage with the model, in enumeration order.
  std::vector<Tensor<Scalar>> parameters() const {
    std::vector<Tensor<Scalar>> out;
    out.reserve(2 * layers_.size());
    for (const auto& l : layers_) {
      out.push_back(l.weight);
      out.push_back(l.bias);
    }
    return out;
  }

  static std::size_t layer_of_parameter(std::size_t param_index) { return param_index / 2; }
  static bool is_bias_parameter(std::size_t param_index) { return param_index % 2 == 1; }

  Index fan_in_of_parameter(std::size_t param_index) const {
    return layers_[layer_of_parameter(param_index)].weight.rows();
  }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  Mlp clone(bool requires_grad) const {
    std::vector<Layer> copy;
    copy.reserve(layers_.size());
    for (const auto& l : layers_) copy.push_back(Layer{l.weight.clone(requires_grad), l.bias.clone(requires_grad)});
    return Mlp(std::move(copy));
  }
  Mlp clone() const { return clone(layers_.front().weight.requires_grad()); }

  /// Taped forward pass producing logits.
  Tensor<Scalar> forward(Tape<Scalar>& tape, const Tensor<Scalar>& x) const {
    check_input(x.value());
    Tensor<Scalar> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = affine(tape, h, layers_[i].weight, layers_[i].bias);
      if (i + 1 < layers_.size()) h = relu(tape, h);
    }
    return h;
  }

  /// Untaped forward pass for inference.
  Matrix<Scalar> logits(const Matrix<Scalar>& x) const {
    check_input(x);
    Matrix<Scalar> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Matrix<Scalar> next = h * layers_[i].weight.value();
      next.rowwise() += layers_[i].bias.value().row(0);
      if (i + 1 < layers_.size()) next = next.cwiseMax(Scalar(0));
      h = std::move(next);
    }
    return h;
  }

 private:
  void check_input(const Matrix<Scalar>& x) const {
    if (x.cols() != input_dim()) {
      throw DimensionError("model expects inputs of width " + std::to_string(input_dim()) + ", got [" +
                           std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + "]");
    }
  }

  std::vector<Layer> layers_;
};

/// Shadow copy of a model's parameters. Never trained; only written by
/// consolidation, and its tensors never carry gradients.
template <typename Scalar>
class StableModel {
 public:
  StableModel() = default;
  explicit StableModel(const Mlp<Scalar>& source) : net_(source.clone(false)) {}

  bool initialized() const { return net_.layer_count() > 0; }
  const Mlp<Scalar>& net() const { return net_; }
  std::vector<Tensor<Scalar>> parameters() const { return net_.parameters(); }
  Matrix<Scalar> logits(const Matrix<Scalar>& x) const { return net_.logits(x); }

  bool congruent_with(const Mlp<Scalar>& model) const {
    return initialized() && net_.widths() == model.widths();
  }

 private:
  Mlp<Scalar> net_;
};

/// Deep copy of the model's parameters into a new stable model.
template <typename Scalar>
StableModel<Scalar> clone_parameters(const Mlp<Scalar>& model) {
  return StableModel<Scalar>(model);
}

}  // namespace fomo

#endif  // FOMO_MODEL_HPP
