#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pwlu/cli/config.hpp"
#include "pwlu/data/dataset.hpp"
#include "pwlu/nn/model.hpp"
#include "pwlu/nn/trainer.hpp"

namespace pwlu::cli {

struct DataSplits {
  data::LabeledDataset train;
  data::LabeledDataset test;
};

// Loads the configured dataset and standardizes both splits with the
// training split's statistics.
DataSplits load_data(const RunConfig& config);

nn::ModelSpec model_spec(const RunConfig& config, const DataSplits& data);
nn::TrainSchedule schedule_for(const RunConfig& config, std::size_t train_size);

struct TrainOutcome {
  nn::TrainResult result;
  nn::Evaluation final_test;
  nn::Evaluation final_train;
  std::string checkpoint_path;
};

// Writes into config.out:
//   config.ini            resolved settings (re-runnable via --config)
//   metrics.csv           epoch,iteration,lr,train_loss,train_acc,test_loss,test_acc
//   checkpoint.bin        final model and trainer state
//   alignment_pre.csv     Phase I statistics vs. initial boundaries
//   alignment_post.csv    the same statistics vs. the reset boundaries
//   alignment_final.csv   end-of-training inputs vs. final boundaries
// The alignment files appear only for PWLU models (pre/post only with
// realignment on).
TrainOutcome cmd_train(const RunConfig& config);

struct SweepRow {
  int n_intervals = 0;
  bool ok = false;
  double test_accuracy = 0.0;
  double train_loss = 0.0;
  std::string error;
};

// One training run per N under identical seeds; failures are recorded and
// the sweep continues. Writes <out>/sweep.csv and one run directory per N.
std::vector<SweepRow> cmd_sweep_n(const RunConfig& config,
                                  const std::vector<int>& n_list);

struct BenchRow {
  std::string kernel;
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

// Times ReLU, the three-branch reference PWLU and the fused PWLU (double
// and float) over config.repetitions passes of a config.bench_elements
// batch. Writes <out>/bench.csv (one row of per-kernel milliseconds per
// repetition, ReLU first) and <out>/bench_summary.csv (mean and std).
std::vector<BenchRow> cmd_bench(const RunConfig& config);

// Shape export of the checkpointed model (or of a freshly initialized one
// when no checkpoint is given) into config.out.
void cmd_export(const RunConfig& config);

}  // namespace pwlu::cli
