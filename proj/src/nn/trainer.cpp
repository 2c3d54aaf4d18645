#include "pwlu/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include "pwlu/error.hpp"
#include "pwlu/format.hpp"
#include "pwlu/nn/loss.hpp"

namespace pwlu::nn {

namespace {

constexpr std::size_t kEvalChunk = 1024;

std::optional<AlignmentReport> try_alignment(Model& model) {
  AlignmentReport report;
  for (PwluLayer* layer : model.pwlu_layers()) {
    for (const Reservoir& r : layer->reservoirs()) {
      if (r.samples().size() < kMinPercentileSamples) return std::nullopt;
    }
    AlignmentReport part = layer->alignment();
    report.units.insert(report.units.end(), part.units.begin(),
                        part.units.end());
  }
  return report;
}

}  // namespace

void write_metrics_csv(const std::vector<EpochMetrics>& rows,
                       std::ostream& out) {
  out << "epoch,iteration,lr,train_loss,train_acc,test_loss,test_acc\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.iteration << ',' << fmt_double(r.lr) << ','
        << fmt_double(r.train_loss) << ',' << fmt_double(r.train_accuracy)
        << ',' << fmt_double(r.test_loss) << ','
        << fmt_double(r.test_accuracy) << '\n';
  }
}

Evaluation evaluate(Model& model, const data::LabeledDataset& dataset) {
  Evaluation eval;
  const std::size_t n = dataset.size();
  if (n == 0) return eval;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kEvalChunk) {
    const std::size_t stop = std::min(n, start + kEvalChunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto labels = dataset.gather_labels(idx);
    const SoftmaxXent out =
        softmax_xent_forward(model.infer(dataset.gather(idx)), labels);
    loss_sum += out.loss * static_cast<double>(idx.size());
    correct += out.correct;
  }
  eval.loss = loss_sum / static_cast<double>(n);
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return eval;
}

AlignmentReport measure_model_alignment(Model& model,
                                        const data::LabeledDataset& dataset,
                                        std::uint64_t seed) {
  // One reservoir per unit, fed with the unit's inputs over the dataset.
  std::vector<std::vector<Reservoir>> pools;
  std::vector<const PwluLayer*> owners;
  const std::size_t n = dataset.size();
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kEvalChunk) {
    const std::size_t stop = std::min(n, start + kEvalChunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    Tensor h = dataset.gather(idx);
    std::size_t pwlu_index = 0;
    for (std::size_t li = 0; li < model.size(); ++li) {
      Layer& layer = model.layer(li);
      if (auto* p = dynamic_cast<PwluLayer*>(&layer)) {
        if (pools.size() <= pwlu_index) {
          pools.emplace_back();
          for (std::size_t u = 0; u < p->unit_count(); ++u) {
            pools.back().emplace_back(seed * 7919ULL + pwlu_index * 131ULL + u);
          }
          owners.push_back(p);
        }
        const std::size_t batch = h.dim(0), channels = p->channels();
        const std::size_t inner = h.size() / (batch * channels);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t u =
                p->granularity() == Granularity::kChannel ? c : 0;
            pools[pwlu_index][u].add(
                h.values().subspan((b * channels + c) * inner, inner));
          }
        }
        ++pwlu_index;
      }
      h = layer.infer(h);
    }
  }
  AlignmentReport report;
  for (std::size_t l = 0; l < owners.size(); ++l) {
    for (std::size_t u = 0; u < pools[l].size(); ++u) {
      report.units.push_back(measure_alignment(
          owners[l]->name(), u, owners[l]->unit(u), pools[l][u].samples()));
    }
  }
  return report;
}

Trainer::Trainer(Model& model, const data::LabeledDataset& train,
                 const data::LabeledDataset* test, TrainSchedule schedule)
    : Trainer(model, train, test, [&] {
        TrainerState fresh;
        fresh.schedule = schedule;
        return fresh;
      }()) {}

Trainer::Trainer(Model& model, const data::LabeledDataset& train,
                 const data::LabeledDataset* test, TrainerState state)
    : model_(model),
      train_(train),
      test_(test),
      state_(std::move(state)),
      optimizer_(state_.schedule.momentum, state_.schedule.weight_decay,
                 state_.schedule.pwlu_lr_multiplier) {
  state_.schedule.validate();
  train_.validate();
  if (train_.size() == 0) {
    throw Error(ErrorCode::kEmptyBatch, "training set is empty");
  }
  iters_per_epoch_ = (train_.size() + state_.schedule.batch_size - 1) /
                     state_.schedule.batch_size;
  optimizer_.set_velocities(state_.velocities);
  result_.metrics = state_.metrics;
  if (state_.iteration == 0 && !state_.realigned) setup_phase();
}

void Trainer::setup_phase() {
  const bool phase_one = state_.schedule.realign_enabled();
  for (PwluLayer* layer : model_.pwlu_layers()) {
    layer->set_frozen(phase_one);
    layer->set_collecting(phase_one);
  }
}

const TrainerState& Trainer::state() const {
  state_.velocities = optimizer_.velocities();
  return state_;
}

const std::vector<std::size_t>& Trainer::epoch_order(std::uint64_t epoch) {
  if (epoch != cached_epoch_) {
    order_.resize(train_.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(state_.schedule.seed),
                      static_cast<std::uint32_t>(state_.schedule.seed >> 32),
                      static_cast<std::uint32_t>(epoch),
                      static_cast<std::uint32_t>(epoch >> 32)};
    std::mt19937_64 rng(seq);
    std::shuffle(order_.begin(), order_.end(), rng);
    cached_epoch_ = epoch;
  }
  return order_;
}

void Trainer::realign() {
  result_.pre_reset = try_alignment(model_);
  std::size_t degenerate = 0;
  for (PwluLayer* layer : model_.pwlu_layers()) {
    degenerate += layer->realign_all();
    layer->set_frozen(false);
    layer->set_collecting(false);
  }
  if (degenerate > 0) {
    std::clog << "warning: " << degenerate
              << " PWLU unit(s) had near-zero input spread; realigned to "
                 "mean +/- "
              << kDegenerateHalfWidth << "\n";
  }
  result_.degenerate_units = degenerate;
  result_.post_reset = try_alignment(model_);
  state_.realigned = true;
}

void Trainer::step() {
  if (done()) return;
  const TrainSchedule& s = state_.schedule;
  const std::uint64_t t = state_.iteration;
  if (s.realign_enabled() && t == s.realign_iteration && !state_.realigned) {
    realign();
  }

  const std::uint64_t epoch = t / iters_per_epoch_;
  const std::uint64_t pos = t % iters_per_epoch_;
  const auto& order = epoch_order(epoch);
  const std::size_t begin = pos * s.batch_size;
  const std::size_t end = std::min<std::size_t>(order.size(), begin + s.batch_size);
  const std::span<const std::size_t> batch_idx(order.data() + begin,
                                               end - begin);
  const auto labels = train_.gather_labels(batch_idx);

  model_.zero_grad();
  const Tensor logits = model_.forward(train_.gather(batch_idx));
  const SoftmaxXent out = softmax_xent_forward(logits, labels);
  if (!std::isfinite(out.loss)) {
    throw Error(ErrorCode::kNonFiniteLoss,
                "non-finite loss at iteration " + std::to_string(t) +
                    " after layer '" +
                    model_.layer(model_.size() - 1).name() + "'");
  }
  model_.backward(softmax_xent_backward(out, labels));
  const double lr = s.lr(t);
  optimizer_.step(model_, lr);

  EpochAccumulator& acc = state_.accumulator;
  acc.loss_sum += out.loss * static_cast<double>(labels.size());
  acc.correct += out.correct;
  acc.seen += labels.size();
  state_.iteration = t + 1;

  if (pos + 1 == iters_per_epoch_ || state_.iteration == s.total_iterations) {
    EpochMetrics m;
    m.epoch = epoch;
    m.iteration = state_.iteration;
    m.lr = lr;
    m.train_loss = acc.loss_sum / static_cast<double>(acc.seen);
    m.train_accuracy =
        static_cast<double>(acc.correct) / static_cast<double>(acc.seen);
    if (test_ != nullptr && test_->size() > 0) {
      const Evaluation e = evaluate(model_, *test_);
      m.test_loss = e.loss;
      m.test_accuracy = e.accuracy;
    }
    state_.metrics.push_back(m);
    result_.metrics.push_back(m);
    acc = EpochAccumulator{};
  }
}

void Trainer::run_until(std::uint64_t iteration) {
  const std::uint64_t stop =
      std::min(iteration, state_.schedule.total_iterations);
  while (state_.iteration < stop) step();
}

TrainResult train_two_phase(Model& model, const data::LabeledDataset& train,
                            const data::LabeledDataset* test,
                            const TrainSchedule& schedule) {
  Trainer trainer(model, train, test, schedule);
  trainer.run();
  return trainer.result();
}

}  // namespace pwlu::nn
