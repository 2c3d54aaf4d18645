#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "pwlu/data/dataset.hpp"
#include "pwlu/nn/model.hpp"
#include "pwlu/nn/optimizer.hpp"
#include "pwlu/stat_align.hpp"

namespace pwlu::nn {

struct EpochMetrics {
  std::uint64_t epoch = 0;
  std::uint64_t iteration = 0;  // iterations completed
  double lr = 0.0;              // rate used by the epoch's last step
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;

  bool operator==(const EpochMetrics&) const = default;
};

void write_metrics_csv(const std::vector<EpochMetrics>& rows,
                       std::ostream& out);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Inference-path loss and accuracy over a whole dataset.
Evaluation evaluate(Model& model, const data::LabeledDataset& dataset);

// Feeds the dataset through the inference path and measures every PWLU
// unit's boundaries against the percentile interval of its actual inputs.
AlignmentReport measure_model_alignment(Model& model,
                                        const data::LabeledDataset& dataset,
                                        std::uint64_t seed = 0);

// Running sums for the epoch in progress.
struct EpochAccumulator {
  double loss_sum = 0.0;  // sum of per-sample losses
  std::uint64_t correct = 0;
  std::uint64_t seen = 0;

  bool operator==(const EpochAccumulator&) const = default;
};

// Everything besides the model that a resumed run needs to continue
// bit-for-bit.
struct TrainerState {
  TrainSchedule schedule;
  std::uint64_t iteration = 0;
  bool realigned = false;
  EpochAccumulator accumulator;
  std::vector<EpochMetrics> metrics;
  std::vector<std::vector<double>> velocities;

  bool operator==(const TrainerState&) const = default;
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  // Alignment of the Phase I statistics against the boundaries just before
  // and just after the reset. Empty when realignment is disabled or a unit
  // saw too few inputs to form percentiles.
  std::optional<AlignmentReport> pre_reset;
  std::optional<AlignmentReport> post_reset;
  std::size_t degenerate_units = 0;
};

// Two-phase PWLU training.
//
// Phase I, iterations [0, T'): every PWLU layer is frozen at its initial
// shape and collects running input statistics; all other weights train.
// At T' each unit is reset to mu +/- 3 sigma (ReLU shape) and unfrozen.
// Phase II, [T', T): everything trains. With T' = 0 the run is plain
// gradient training from the initial boundaries.
class Trainer {
 public:
  Trainer(Model& model, const data::LabeledDataset& train,
          const data::LabeledDataset* test, TrainSchedule schedule);
  // Resume from a checkpointed state. The model must be the one the state
  // was saved with.
  Trainer(Model& model, const data::LabeledDataset& train,
          const data::LabeledDataset* test, TrainerState state);

  std::uint64_t iteration() const { return state_.iteration; }
  std::uint64_t iterations_per_epoch() const { return iters_per_epoch_; }
  bool done() const {
    return state_.iteration >= state_.schedule.total_iterations;
  }

  void step();
  void run_until(std::uint64_t iteration);
  void run() { run_until(state_.schedule.total_iterations); }

  const TrainerState& state() const;
  const TrainResult& result() const { return result_; }

 private:
  void setup_phase();
  void realign();
  const std::vector<std::size_t>& epoch_order(std::uint64_t epoch);

  Model& model_;
  const data::LabeledDataset& train_;
  const data::LabeledDataset* test_;
  mutable TrainerState state_;
  SgdMomentum optimizer_;
  std::uint64_t iters_per_epoch_;
  std::uint64_t cached_epoch_ = UINT64_MAX;
  std::vector<std::size_t> order_;
  TrainResult result_;
};

TrainResult train_two_phase(Model& model, const data::LabeledDataset& train,
                            const data::LabeledDataset* test,
                            const TrainSchedule& schedule);

}  // namespace pwlu::nn
