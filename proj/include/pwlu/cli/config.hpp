#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pwlu::cli {

struct RunConfig {
  std::string subcommand;

  // Data: "spirals" or "idx:DIR" (DIR holds the four MNIST-named files).
  std::string dataset = "spirals";
  std::uint64_t spiral_points = 500;  // per class, each split
  double spiral_noise = 0.5;
  std::uint64_t data_seed = 7;

  // Model.
  std::string arch = "32,32";
  std::string activation = "pwlu";
  int n_intervals = 16;
  std::string granularity = "channel";
  double half_width = 3.0;

  // Schedule.
  std::string realign = "on";
  std::uint64_t t_prime_epochs = 5;
  std::uint64_t epochs = 40;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double pwlu_lr_multiplier = 1.0;
  std::uint64_t batch_size = 32;
  std::uint64_t seed = 0;

  std::string out = "run";
  std::string resume;      // train: continue from this checkpoint
  std::string checkpoint;  // bench/export: read parameters from here

  // sweep
  std::string n_list = "4,8,12,16,20";

  // bench
  std::uint64_t bench_elements = 1'000'000;
  std::uint64_t repetitions = 500;

  // export
  int samples_per_interval = 16;

  bool realign_on() const { return realign == "on"; }
  bool is_pwlu() const { return activation == "pwlu"; }

  // Throws ErrorCode::kInvalidConfig naming the offending field.
  void validate() const;
};

// Parses argv-style arguments (without the program name): a subcommand
// followed by flags, optionally --config FILE. Precedence is command line,
// then config file, then defaults. Help requests throw CLI11's CallForHelp,
// which callers may catch via run_cli below.
RunConfig parse_run_config(const std::vector<std::string>& args);

// Flat key = value text of every setting, accepted back by --config.
std::string config_to_text(const RunConfig& config);

// Comma-separated interval counts; each must be even, >= 2 and unique.
std::vector<int> parse_n_list(const std::string& text);
void validate_n_list(const std::vector<int>& n_list);

std::string help_text();

// Full command-line entry point; returns the process exit code. Errors are
// reported on stderr as a single line:
//   error code=<name> message=<text>
int run_cli(int argc, const char* const* argv);

}  // namespace pwlu::cli
