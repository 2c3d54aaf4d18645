#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pwlu/tensor.hpp"

namespace pwlu::nn {

// A trainable array owned by a layer, paired with its gradient buffer.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
  bool decay = true;
  bool is_pwlu = false;
};

// Enough to rebuild an empty layer of the same shape; the values themselves
// travel separately through params().
struct LayerSpec {
  std::string kind;
  std::string name;
  std::vector<std::uint64_t> dims;
};

class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const std::string& name() const { return name_; }
  virtual LayerSpec spec() const = 0;

  // Training forward; caches whatever backward needs.
  virtual Tensor forward(const Tensor& x) = 0;
  // Inference forward. Must not touch training caches or statistics.
  virtual Tensor infer(const Tensor& x) { return forward(x); }
  // Accumulates parameter gradients and returns the input gradient.
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::vector<ParamRef> params() { return {}; }
  virtual void zero_grad() {}
  // Frozen layers are skipped by the optimizer.
  virtual bool frozen() const { return false; }
  // Called after every optimizer step.
  virtual void after_update() {}

 private:
  std::string name_;
};

}  // namespace pwlu::nn
