#pragma once

// Standard layers: fully connected, 2-D convolution and fixed activations.

#include <cstddef>
#include <random>

#include "pwlu/nn/layer.hpp"

namespace pwlu::nn {

// y = x W^T + b. Inputs of rank > 2 are flattened to [batch, features].
class Dense : public Layer {
 public:
  Dense(std::string name, std::size_t in_features, std::size_t out_features);

  // He-uniform weights, zero bias.
  void init_he_uniform(std::mt19937_64& rng);

  LayerSpec spec() const override;
  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<ParamRef> params() override;
  void zero_grad() override;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  // Row-major [out, in].
  std::vector<double>& weights() { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& weight_grad() const { return weight_grad_; }
  const std::vector<double>& bias_grad() const { return bias_grad_; }

 private:
  Tensor apply(const Tensor& x) const;

  std::size_t in_;
  std::size_t out_;
  std::vector<double> weights_;
  std::vector<double> bias_;
  std::vector<double> weight_grad_;
  std::vector<double> bias_grad_;
  Tensor input_;
};

// Input [batch, in_channels, height, width], square kernel, zero padding.
class Conv2d : public Layer {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel, std::size_t stride, std::size_t padding);

  void init_he_uniform(std::mt19937_64& rng);

  LayerSpec spec() const override;
  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<ParamRef> params() override;
  void zero_grad() override;

  std::size_t output_extent(std::size_t input_extent) const;
  // Row-major [out_c, in_c, k, k].
  std::vector<double>& weights() { return weights_; }
  std::vector<double>& bias() { return bias_; }

 private:
  Tensor apply(const Tensor& x) const;

  std::size_t in_c_;
  std::size_t out_c_;
  std::size_t k_;
  std::size_t stride_;
  std::size_t pad_;
  std::vector<double> weights_;
  std::vector<double> bias_;
  std::vector<double> weight_grad_;
  std::vector<double> bias_grad_;
  Tensor input_;
};

class Relu : public Layer {
 public:
  using Layer::Layer;
  LayerSpec spec() const override { return {"relu", name(), {}}; }
  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor input_;
};

// x * sigmoid(x)
class Swish : public Layer {
 public:
  using Layer::Layer;
  LayerSpec spec() const override { return {"swish", name(), {}}; }
  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor input_;
};

}  // namespace pwlu::nn
