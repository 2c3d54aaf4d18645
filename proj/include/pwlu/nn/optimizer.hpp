#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pwlu/nn/model.hpp"

namespace pwlu::nn {

// Cosine decay from base_lr to 0 over the whole run, preceded by a linear
// warmup over the first warmup_fraction of iterations.
struct TrainSchedule {
  std::uint64_t total_iterations = 0;
  // First iteration of the learning phase. 0 disables the frozen
  // statistics phase and the boundary reset.
  std::uint64_t realign_iteration = 0;
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double warmup_fraction = 0.05;
  // Multiplies lr for PWLU parameters.
  double pwlu_lr_multiplier = 1.0;
  std::uint64_t batch_size = 32;
  std::uint64_t seed = 0;

  bool realign_enabled() const { return realign_iteration > 0; }
  std::uint64_t warmup_iterations() const;
  double lr(std::uint64_t t) const;
  // Throws kScheduleViolation when the phase boundary is not inside the run.
  void validate() const;

  bool operator==(const TrainSchedule&) const = default;
};

// v <- m v + g;  p <- p - lr (v + wd p)
void sgd_momentum_update(std::span<double> value, std::span<const double> grad,
                         std::span<double> velocity, double lr,
                         double momentum, double weight_decay);

class SgdMomentum {
 public:
  SgdMomentum(double momentum, double weight_decay,
              double pwlu_lr_multiplier = 1.0)
      : momentum_(momentum),
        weight_decay_(weight_decay),
        pwlu_lr_multiplier_(pwlu_lr_multiplier) {}

  // Updates every parameter of every non-frozen layer, then lets each
  // layer repair its invariants. PWLU parameters never get weight decay.
  void step(Model& model, double lr);

  // One velocity buffer per ParamRef, in Model::params() order.
  const std::vector<std::vector<double>>& velocities() const {
    return velocities_;
  }
  void set_velocities(std::vector<std::vector<double>> v) {
    velocities_ = std::move(v);
  }

 private:
  double momentum_;
  double weight_decay_;
  double pwlu_lr_multiplier_;
  std::vector<std::vector<double>> velocities_;
};

}  // namespace pwlu::nn
