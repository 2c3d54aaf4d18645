#pragma once

#include <span>

#include "pwlu/tensor.hpp"

namespace pwlu::nn {

struct SoftmaxXent {
  double loss = 0.0;     // mean over the batch
  Tensor probabilities;  // [batch, classes]
  std::size_t correct = 0;
};

// logits: [batch, classes]; labels in [0, classes).
SoftmaxXent softmax_xent_forward(const Tensor& logits,
                                 std::span<const int> labels);

// Gradient of the mean loss w.r.t. the logits: (p - onehot) / batch.
Tensor softmax_xent_backward(const SoftmaxXent& forward,
                             std::span<const int> labels);

}  // namespace pwlu::nn
