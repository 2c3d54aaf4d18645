#include "pwlu/nn/loss.hpp"

#include <cmath>
#include <string>

#include "pwlu/error.hpp"

namespace pwlu::nn {

SoftmaxXent softmax_xent_forward(const Tensor& logits,
                                 std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "softmax_xent: logits " + logits.shape_string() + " vs " +
                    std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  SoftmaxXent out;
  out.probabilities = Tensor(logits.shape());
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw Error(ErrorCode::kShapeMismatch,
                  "softmax_xent: label " + std::to_string(label) +
                      " outside [0, " + std::to_string(classes) + ")");
    }
    const double* z = logits.data() + b * classes;
    double* p = out.probabilities.data() + b * classes;
    std::size_t argmax = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (z[c] > z[argmax]) argmax = c;
    }
    const double zmax = z[argmax];
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      p[c] = std::exp(z[c] - zmax);
      sum += p[c];
    }
    for (std::size_t c = 0; c < classes; ++c) p[c] /= sum;
    total += std::log(sum) - (z[label] - zmax);
    if (argmax == static_cast<std::size_t>(label)) ++out.correct;
  }
  out.loss = total / static_cast<double>(batch);
  return out;
}

Tensor softmax_xent_backward(const SoftmaxXent& forward,
                             std::span<const int> labels) {
  const Tensor& p = forward.probabilities;
  const std::size_t batch = p.dim(0), classes = p.dim(1);
  if (labels.size() != batch) {
    throw Error(ErrorCode::kShapeMismatch,
                "softmax_xent backward: label count mismatch");
  }
  Tensor grad(p.shape());
  const double scale = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double target = static_cast<int>(c) == labels[b] ? 1.0 : 0.0;
      grad[b * classes + c] = (p[b * classes + c] - target) * scale;
    }
  }
  return grad;
}

}  // namespace pwlu::nn
