#include "pwlu/nn/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pwlu/error.hpp"

namespace pwlu::nn {

std::uint64_t TrainSchedule::warmup_iterations() const {
  return static_cast<std::uint64_t>(
      std::floor(warmup_fraction * static_cast<double>(total_iterations)));
}

double TrainSchedule::lr(std::uint64_t t) const {
  const std::uint64_t warmup = warmup_iterations();
  if (t < warmup) {
    return base_lr * static_cast<double>(t + 1) / static_cast<double>(warmup);
  }
  const double span = static_cast<double>(total_iterations - warmup);
  const double progress = static_cast<double>(t - warmup) / span;
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void TrainSchedule::validate() const {
  if (realign_enabled() && realign_iteration >= total_iterations) {
    throw Error(ErrorCode::kScheduleViolation,
                "realign iteration " + std::to_string(realign_iteration) +
                    " must be below the total of " +
                    std::to_string(total_iterations) + " iterations");
  }
  if (batch_size == 0) {
    throw Error(ErrorCode::kScheduleViolation, "batch_size must be positive");
  }
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw Error(ErrorCode::kScheduleViolation,
                "warmup_fraction must lie in [0, 1)");
  }
  if (!std::isfinite(base_lr) || base_lr < 0.0) {
    throw Error(ErrorCode::kScheduleViolation,
                "base_lr must be finite and non-negative");
  }
}

void sgd_momentum_update(std::span<double> value, std::span<const double> grad,
                         std::span<double> velocity, double lr,
                         double momentum, double weight_decay) {
  if (value.size() != grad.size() || value.size() != velocity.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "sgd update: parameter, gradient and velocity sizes differ");
  }
  for (std::size_t i = 0; i < value.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    value[i] -= lr * (velocity[i] + weight_decay * value[i]);
  }
}

void SgdMomentum::step(Model& model, double lr) {
  std::size_t slot = 0;
  for (std::size_t li = 0; li < model.size(); ++li) {
    Layer& layer = model.layer(li);
    for (ParamRef& p : layer.params()) {
      if (slot == velocities_.size()) {
        velocities_.emplace_back(p.value.size(), 0.0);
      }
      std::vector<double>& v = velocities_[slot++];
      if (v.size() != p.value.size()) {
        throw Error(ErrorCode::kShapeMismatch,
                    "optimizer state does not match parameter " + p.name);
      }
      if (layer.frozen()) continue;
      const double rate = p.is_pwlu ? lr * pwlu_lr_multiplier_ : lr;
      const double wd = p.decay ? weight_decay_ : 0.0;
      sgd_momentum_update(p.value, p.grad, v, rate, momentum_, wd);
    }
    if (!layer.frozen()) layer.after_update();
  }
}

}  // namespace pwlu::nn
