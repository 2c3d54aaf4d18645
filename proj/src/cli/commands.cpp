#include "pwlu/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>

#include "pwlu/data/export.hpp"
#include "pwlu/data/idx.hpp"
#include "pwlu/error.hpp"
#include "pwlu/format.hpp"
#include "pwlu/kernel.hpp"
#include "pwlu/nn/checkpoint.hpp"

namespace pwlu::cli {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir + ": " + ec.message());
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& body) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  body(out);
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

nn::Model model_from_checkpoint_or_config(const RunConfig& config) {
  if (!config.checkpoint.empty()) {
    return nn::load_checkpoint(config.checkpoint).model;
  }
  const DataSplits data = load_data(config);
  return nn::build_model(model_spec(config, data));
}

// Doubles embedded quotes for a quoted CSV field.
std::string csv_quoted(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out;
}

}  // namespace

DataSplits load_data(const RunConfig& config) {
  DataSplits d;
  if (config.dataset == "spirals") {
    d.train = data::gen_spirals(config.spiral_points, config.spiral_noise,
                                config.data_seed);
    d.test = data::gen_spirals(config.spiral_points, config.spiral_noise,
                               config.data_seed + 1);
    d.test.split = "test";
  } else {
    auto splits = data::load_idx_dir(config.dataset.substr(4));
    d.train = std::move(splits.train);
    d.test = std::move(splits.test);
  }
  const auto standardizer = data::Standardizer::fit(d.train);
  standardizer.apply(d.train);
  standardizer.apply(d.test);
  return d;
}

nn::ModelSpec model_spec(const RunConfig& config, const DataSplits& data) {
  nn::ModelSpec spec;
  spec.input_shape = data.train.sample_shape();
  spec.hidden = nn::parse_arch(config.arch);
  spec.classes = static_cast<std::size_t>(data.train.num_classes);
  spec.activation = nn::parse_activation(config.activation);
  spec.pwlu.n_intervals = config.n_intervals;
  spec.pwlu.granularity = nn::parse_granularity(config.granularity);
  spec.pwlu.half_width = config.half_width;
  spec.seed = config.seed;
  return spec;
}

nn::TrainSchedule schedule_for(const RunConfig& config,
                               std::size_t train_size) {
  nn::TrainSchedule s;
  const std::uint64_t per_epoch =
      (train_size + config.batch_size - 1) / config.batch_size;
  s.total_iterations = config.epochs * per_epoch;
  // A zero-epoch run only checkpoints the initialization, so it never
  // reaches a realignment.
  s.realign_iteration =
      config.is_pwlu() && config.realign_on() && config.epochs > 0
          ? config.t_prime_epochs * per_epoch
          : 0;
  s.base_lr = config.lr;
  s.momentum = config.momentum;
  s.weight_decay = config.weight_decay;
  s.pwlu_lr_multiplier = config.pwlu_lr_multiplier;
  s.batch_size = config.batch_size;
  s.seed = config.seed;
  return s;
}

TrainOutcome cmd_train(const RunConfig& config) {
  config.validate();
  const DataSplits data = load_data(config);
  ensure_dir(config.out);
  const fs::path root(config.out);
  write_file(root / "config.ini",
             [&](std::ostream& o) { o << config_to_text(config); });

  nn::Model model;
  std::optional<nn::Trainer> trainer;
  if (!config.resume.empty()) {
    nn::Checkpoint ck = nn::load_checkpoint(config.resume);
    model = std::move(ck.model);
    trainer.emplace(model, data.train, &data.test, std::move(ck.state));
  } else {
    model = nn::build_model(model_spec(config, data));
    trainer.emplace(model, data.train, &data.test,
                    schedule_for(config, data.train.size()));
  }
  if (config.epochs > 0) {
    trainer->run();
  }

  TrainOutcome outcome;
  outcome.result = trainer->result();
  outcome.final_test = nn::evaluate(model, data.test);
  outcome.final_train = nn::evaluate(model, data.train);
  outcome.checkpoint_path = (root / "checkpoint.bin").string();
  nn::save_checkpoint(outcome.checkpoint_path, model, trainer->state());

  write_file(root / "metrics.csv", [&](std::ostream& o) {
    nn::write_metrics_csv(outcome.result.metrics, o);
  });
  if (outcome.result.pre_reset) {
    write_alignment_csv(*outcome.result.pre_reset,
                        (root / "alignment_pre.csv").string());
  }
  if (outcome.result.post_reset) {
    write_alignment_csv(*outcome.result.post_reset,
                        (root / "alignment_post.csv").string());
  }
  if (!model.pwlu_layers().empty()) {
    write_alignment_csv(
        nn::measure_model_alignment(model, data.train, config.seed),
        (root / "alignment_final.csv").string());
  }
  return outcome;
}

std::vector<SweepRow> cmd_sweep_n(const RunConfig& config,
                                  const std::vector<int>& n_list) {
  validate_n_list(n_list);
  ensure_dir(config.out);
  std::vector<SweepRow> rows;
  for (int n : n_list) {
    RunConfig run = config;
    run.subcommand = "train";
    run.n_intervals = n;
    run.out = (fs::path(config.out) / ("n" + std::to_string(n))).string();
    SweepRow row;
    row.n_intervals = n;
    try {
      const TrainOutcome o = cmd_train(run);
      row.ok = true;
      row.test_accuracy = o.final_test.accuracy;
      row.train_loss = o.final_train.loss;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  write_file(fs::path(config.out) / "sweep.csv", [&](std::ostream& o) {
    o << "n_intervals,status,test_acc,train_loss,error\n";
    for (const SweepRow& r : rows) {
      o << r.n_intervals << ',' << (r.ok ? "ok" : "failed") << ','
        << fmt_double(r.test_accuracy) << ',' << fmt_double(r.train_loss)
        << ",\"" << csv_quoted(r.error) << "\"\n";
    }
  });
  return rows;
}

std::vector<BenchRow> cmd_bench(const RunConfig& config) {
  PwluParams params;
  if (!config.checkpoint.empty()) {
    nn::Model model = nn::load_checkpoint(config.checkpoint).model;
    const auto layers = model.pwlu_layers();
    if (layers.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "checkpoint: model has no PWLU layer to benchmark");
    }
    params = layers.front()->unit(0);
  } else {
    params = init_pwlu_relu(config.n_intervals, config.half_width);
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> jitter(0.0, 0.1);
    for (double& y : params.y_points) y += jitter(rng);
    params.left_slope = 0.1;
    params.right_slope = 0.9;
  }
  validate(params);

  const std::size_t n = config.bench_elements;
  const double d = params.interval_length();
  std::mt19937_64 rng(config.seed + 1);
  std::uniform_real_distribution<double> dist(params.left_boundary - 5 * d,
                                              params.right_boundary + 5 * d);
  std::vector<double> x(n), out(n);
  std::vector<float> xf(n), outf(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = dist(rng);
    xf[i] = static_cast<float>(x[i]);
  }
  const auto table = build_fused<double>(params);
  const auto table_f = build_fused<float>(params);

  struct Kernel {
    const char* name;
    std::function<void()> run;
    std::vector<double> samples;
  };
  std::vector<Kernel> kernels = {
      {"relu",
       [&] {
         for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
       },
       {}},
      {"pwlu_reference", [&] { forward_reference(x, params, out); }, {}},
      {"pwlu_fused", [&] { forward_fused<double>(x, table, out); }, {}},
      {"pwlu_fused_f32", [&] { forward_fused<float>(xf, table_f, outf); }, {}},
  };
  volatile double sink = 0.0;
  for (std::uint64_t rep = 0; rep < config.repetitions; ++rep) {
    for (Kernel& k : kernels) {
      const auto t0 = std::chrono::steady_clock::now();
      k.run();
      const auto t1 = std::chrono::steady_clock::now();
      k.samples.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());
      sink = sink + out[rep % n] + outf[rep % n];
    }
  }

  std::vector<BenchRow> rows;
  for (const Kernel& k : kernels) {
    double mean = 0.0;
    for (double s : k.samples) mean += s;
    mean /= static_cast<double>(k.samples.size());
    double var = 0.0;
    for (double s : k.samples) var += (s - mean) * (s - mean);
    var /= static_cast<double>(k.samples.size());
    rows.push_back({k.name, mean, std::sqrt(var)});
  }
  ensure_dir(config.out);
  write_file(fs::path(config.out) / "bench.csv", [&](std::ostream& o) {
    o << "repetition";
    for (const Kernel& k : kernels) o << ',' << k.name << "_ms";
    o << '\n';
    for (std::uint64_t rep = 0; rep < config.repetitions; ++rep) {
      o << rep;
      for (const Kernel& k : kernels) o << ',' << fmt_double(k.samples[rep]);
      o << '\n';
    }
  });
  write_file(fs::path(config.out) / "bench_summary.csv", [&](std::ostream& o) {
    o << "kernel,elements,repetitions,mean_ms,std_ms\n";
    for (const BenchRow& r : rows) {
      o << r.kernel << ',' << n << ',' << config.repetitions << ','
        << fmt_double(r.mean_ms) << ',' << fmt_double(r.std_ms) << '\n';
    }
  });
  return rows;
}

void cmd_export(const RunConfig& config) {
  nn::Model model = model_from_checkpoint_or_config(config);
  if (model.pwlu_layers().empty()) {
    throw Error(ErrorCode::kInvalidConfig,
                "export: model has no PWLU layers");
  }
  data::export_shapes(model, config.out, config.samples_per_interval);
}

}  // namespace pwlu::cli
