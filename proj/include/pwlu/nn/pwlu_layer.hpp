#pragma once

#include <cstdint>
#include <optional>

#include "pwlu/kernel.hpp"
#include "pwlu/nn/layer.hpp"
#include "pwlu/stat_align.hpp"

namespace pwlu::nn {

enum class Granularity { kLayer, kChannel };

const char* granularity_name(Granularity g);
Granularity parse_granularity(const std::string& text);

// A bank of PWLU units applied elementwise. Axis 1 is the channel axis:
// features for [batch, features] inputs, channels for [batch, C, H, W].
// Layer-wise banks hold one unit shared by every channel.
//
// Two training-phase switches live here:
//   frozen     - the optimizer leaves every unit untouched
//   collecting - each training forward feeds running stats and reservoirs
class PwluLayer : public Layer {
 public:
  PwluLayer(std::string name, Granularity granularity, std::size_t channels,
            const PwluParams& init, std::uint64_t reservoir_seed = 0);

  LayerSpec spec() const override;
  Tensor forward(const Tensor& x) override;
  // Evaluates through the fused slope/offset tables.
  Tensor infer(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<ParamRef> params() override;
  void zero_grad() override;
  bool frozen() const override { return frozen_; }
  void after_update() override;

  Granularity granularity() const { return granularity_; }
  std::size_t channels() const { return channels_; }
  std::size_t unit_count() const { return units_.size(); }
  int n_intervals() const { return units_.front().n_intervals; }

  const std::vector<PwluParams>& units() const { return units_; }
  const PwluParams& unit(std::size_t i) const { return units_.at(i); }
  void set_unit(std::size_t i, PwluParams params);
  const PwluGrads& unit_grads(std::size_t i) const { return grads_.at(i); }

  const std::vector<RunningStats>& stats() const { return stats_; }
  void set_stats(std::size_t i, const RunningStats& s) { stats_.at(i) = s; }
  const std::vector<Reservoir>& reservoirs() const { return reservoirs_; }
  Reservoir& reservoir(std::size_t i) { return reservoirs_.at(i); }

  void set_frozen(bool frozen) { frozen_ = frozen; }
  bool collecting() const { return collecting_; }
  void set_collecting(bool collecting) { collecting_ = collecting; }
  void set_stats_momentum(double momentum) { stats_momentum_ = momentum; }

  // Applies the 3-sigma reset to every unit from its running statistics.
  // Returns the number of units that hit the degenerate-sigma fallback.
  std::size_t realign_all();

  // IOU of each unit's boundaries against the percentiles of its reservoir.
  AlignmentReport alignment() const;

 private:
  std::size_t unit_of_channel(std::size_t c) const {
    return granularity_ == Granularity::kChannel ? c : 0;
  }
  void check_input(const Tensor& x) const;
  void collect(const Tensor& x);

  Granularity granularity_;
  std::size_t channels_;
  std::vector<PwluParams> units_;
  std::vector<PwluGrads> grads_;
  std::vector<RunningStats> stats_;
  std::vector<Reservoir> reservoirs_;
  std::vector<std::optional<FusedPwluTable<double>>> fused_;
  bool frozen_ = false;
  bool collecting_ = false;
  double stats_momentum_ = kStatsMomentum;
  Tensor input_;
};

}  // namespace pwlu::nn
