#include "pwlu/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "pwlu/error.hpp"
#include "pwlu/format.hpp"
#include "pwlu/nn/model.hpp"
#include "pwlu/nn/pwlu_layer.hpp"

namespace pwlu::cli {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, field + ": " + why);
}

void bind_options(CLI::App& app, RunConfig& c) {
  app.add_option("--dataset", c.dataset, "spirals | idx:DIR");
  app.add_option("--spiral-points", c.spiral_points,
                 "Spiral samples per class in each split");
  app.add_option("--spiral-noise", c.spiral_noise, "Spiral Gaussian noise");
  app.add_option("--data-seed", c.data_seed, "Seed for synthetic data");
  app.add_option("--arch", c.arch,
                 "Hidden layers, comma separated: 32 = dense, c8 = conv");
  app.add_option("--activation", c.activation, "relu | swish | pwlu");
  app.add_option("--n-intervals", c.n_intervals, "PWLU interval count N");
  app.add_option("--granularity", c.granularity, "layer | channel");
  app.add_option("--half-width", c.half_width,
                 "Initial PWLU boundaries are [-w, w]");
  app.add_option("--realign", c.realign, "on | off");
  app.add_option("--t-prime-epochs", c.t_prime_epochs,
                 "Length of the frozen statistics phase, in epochs");
  app.add_option("--epochs", c.epochs, "Training epochs");
  app.add_option("--lr", c.lr, "Peak learning rate");
  app.add_option("--momentum", c.momentum, "SGD momentum");
  app.add_option("--weight-decay", c.weight_decay,
                 "Weight decay (never applied to PWLU parameters)");
  app.add_option("--pwlu-lr-multiplier", c.pwlu_lr_multiplier,
                 "Learning-rate multiplier for PWLU parameters");
  app.add_option("--batch-size", c.batch_size, "Minibatch size");
  app.add_option("--seed", c.seed, "Seed for weights and shuffling");
  app.add_option("--out", c.out, "Output directory");
  app.add_option("--resume", c.resume, "Checkpoint to continue training from");
  app.add_option("--checkpoint", c.checkpoint,
                 "Checkpoint providing parameters (bench, export)");
  app.add_option("--n-list", c.n_list, "Interval counts for sweep");
  app.add_option("--bench-elements", c.bench_elements,
                 "Elements per benchmark batch");
  app.add_option("--repetitions", c.repetitions, "Benchmark repetitions");
  app.add_option("--samples-per-interval", c.samples_per_interval,
                 "Export sampling density");
}

void configure_app(CLI::App& app, RunConfig& c) {
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key = value settings file");
  bind_options(app, c);
  app.add_subcommand("train", "Two-phase training run");
  app.add_subcommand("sweep", "One training run per interval count");
  app.add_subcommand("bench", "Inference latency of ReLU vs. PWLU kernels");
  app.add_subcommand("export", "Sampled activation shapes for plotting");
}

}  // namespace

std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    const auto* end = item.data() + item.size();
    auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (item.empty() || ec != std::errc() || ptr != end) {
      bad("n-list", "'" + item + "' is not an integer");
    }
    out.push_back(v);
  }
  validate_n_list(out);
  return out;
}

void validate_n_list(const std::vector<int>& n_list) {
  if (n_list.empty()) bad("n-list", "must not be empty");
  std::set<int> seen;
  for (int n : n_list) {
    if (n < 2 || n % 2 != 0) {
      bad("n-list", "every N must be even and >= 2, got " + std::to_string(n));
    }
    if (!seen.insert(n).second) {
      bad("n-list", "duplicate N " + std::to_string(n));
    }
  }
}

void RunConfig::validate() const {
  if (dataset != "spirals" && dataset.rfind("idx:", 0) != 0) {
    bad("dataset", "expected 'spirals' or 'idx:DIR', got '" + dataset + "'");
  }
  if (dataset == "idx:") bad("dataset", "idx: needs a directory");
  if (spiral_points == 0) bad("spiral-points", "must be positive");
  if (!(spiral_noise >= 0.0)) bad("spiral-noise", "must be non-negative");
  try {
    nn::parse_arch(arch);
    nn::parse_activation(activation);
    nn::parse_granularity(granularity);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  if (realign != "on" && realign != "off") {
    bad("realign", "must be 'on' or 'off', got '" + realign + "'");
  }
  if (is_pwlu()) {
    if (n_intervals < 2 || n_intervals % 2 != 0) {
      bad("n-intervals", "must be even and >= 2 for ReLU initialization");
    }
    if (!(half_width > 0.0)) bad("half-width", "must be positive");
    if (realign_on() && epochs > 0) {
      if (t_prime_epochs == 0) bad("t-prime-epochs", "must be >= 1 with realign on");
      if (t_prime_epochs >= epochs) {
        bad("t-prime-epochs", "must be below epochs (" +
                                  std::to_string(epochs) + ") with realign on");
      }
    }
  }
  if (!(lr >= 0.0)) bad("lr", "must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) bad("momentum", "must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) bad("weight-decay", "must be non-negative");
  if (!(pwlu_lr_multiplier >= 0.0)) bad("pwlu-lr-multiplier", "must be non-negative");
  if (batch_size == 0) bad("batch-size", "must be positive");
  if (out.empty()) bad("out", "must not be empty");
  if (subcommand == "sweep") parse_n_list(n_list);
  if (subcommand == "bench") {
    if (bench_elements == 0) bad("bench-elements", "must be positive");
    if (repetitions == 0) bad("repetitions", "must be positive");
  }
  if (samples_per_interval < 1) bad("samples-per-interval", "must be positive");
}

std::string help_text() {
  RunConfig c;
  CLI::App app{"Piecewise Linear Unit training and inference tools", "pwlu"};
  configure_app(app, c);
  return app.help();
}

RunConfig parse_run_config(const std::vector<std::string>& args) {
  RunConfig c;
  CLI::App app{"Piecewise Linear Unit training and inference tools", "pwlu"};
  configure_app(app, c);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw;
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  c.subcommand = app.get_subcommands().front()->get_name();
  c.validate();
  return c;
}

std::string config_to_text(const RunConfig& c) {
  std::ostringstream o;
  const auto str = [&](const char* k, const std::string& v) {
    o << k << " = \"" << v << "\"\n";
  };
  const auto num = [&](const char* k, auto v) { o << k << " = " << v << "\n"; };
  const auto real = [&](const char* k, double v) {
    o << k << " = " << fmt_double(v) << "\n";
  };
  str("dataset", c.dataset);
  num("spiral-points", c.spiral_points);
  real("spiral-noise", c.spiral_noise);
  num("data-seed", c.data_seed);
  str("arch", c.arch);
  str("activation", c.activation);
  num("n-intervals", c.n_intervals);
  str("granularity", c.granularity);
  real("half-width", c.half_width);
  str("realign", c.realign);
  num("t-prime-epochs", c.t_prime_epochs);
  num("epochs", c.epochs);
  real("lr", c.lr);
  real("momentum", c.momentum);
  real("weight-decay", c.weight_decay);
  real("pwlu-lr-multiplier", c.pwlu_lr_multiplier);
  num("batch-size", c.batch_size);
  num("seed", c.seed);
  str("out", c.out);
  str("n-list", c.n_list);
  num("bench-elements", c.bench_elements);
  num("repetitions", c.repetitions);
  num("samples-per-interval", c.samples_per_interval);
  return o.str();
}

}  // namespace pwlu::cli
