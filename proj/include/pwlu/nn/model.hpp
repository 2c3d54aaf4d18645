#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pwlu/nn/layer.hpp"
#include "pwlu/nn/pwlu_layer.hpp"

namespace pwlu::nn {

enum class Activation { kRelu, kSwish, kPwlu };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& text);

struct PwluOptions {
  int n_intervals = 16;
  Granularity granularity = Granularity::kChannel;
  double half_width = 3.0;
};

// Hidden layers are given as tokens: "32" is a dense layer of width 32,
// "c8" a 3x3 stride-2 convolution with 8 output channels. Every hidden
// layer is followed by the chosen activation; the output layer is a plain
// dense layer producing logits.
struct ModelSpec {
  std::vector<std::size_t> input_shape;  // per sample, e.g. {2} or {1,28,28}
  std::vector<std::string> hidden;
  std::size_t classes = 2;
  Activation activation = Activation::kRelu;
  PwluOptions pwlu;
  std::uint64_t seed = 0;
};

std::vector<std::string> parse_arch(const std::string& text);

class Model {
 public:
  Model() = default;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  void add(std::unique_ptr<Layer> layer);

  // Training forward. Throws kNonFiniteLoss naming the first layer whose
  // output is not finite.
  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x);
  void backward(const Tensor& grad_out);

  std::vector<ParamRef> params();
  void zero_grad();

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  std::vector<PwluLayer*> pwlu_layers();
  std::vector<const PwluLayer*> pwlu_layers() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

Model build_model(const ModelSpec& spec);

// Empty (zero-valued) layer of the given shape, used when loading
// checkpoints.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

}  // namespace pwlu::nn
