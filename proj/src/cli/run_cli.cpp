#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "pwlu/cli/commands.hpp"
#include "pwlu/cli/config.hpp"
#include "pwlu/error.hpp"
#include "pwlu/format.hpp"

namespace pwlu::cli {

namespace {

// Error lines must stay on one line for callers that parse stderr.
std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

void print_train(const TrainOutcome& o) {
  std::cout << "final test accuracy " << fmt_double(o.final_test.accuracy)
            << ", test loss " << fmt_double(o.final_test.loss) << "\n";
  if (o.result.pre_reset && o.result.post_reset) {
    std::cout << "mean IOU before reset " << fmt_double(o.result.pre_reset->mean_iou())
              << ", after reset " << fmt_double(o.result.post_reset->mean_iou())
              << "\n";
  }
  std::cout << "checkpoint " << o.checkpoint_path << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const RunConfig config = parse_run_config(args);
    if (config.subcommand == "train") {
      print_train(cmd_train(config));
    } else if (config.subcommand == "sweep") {
      const auto rows = cmd_sweep_n(config, parse_n_list(config.n_list));
      std::cout << "| N | status | test acc |\n|---|---|---|\n";
      for (const SweepRow& r : rows) {
        std::cout << "| " << r.n_intervals << " | " << (r.ok ? "ok" : "failed")
                  << " | " << fmt_double(r.test_accuracy) << " |\n";
      }
    } else if (config.subcommand == "bench") {
      std::printf("%-16s %12s %12s\n", "kernel", "mean_ms", "std_ms");
      for (const BenchRow& r : cmd_bench(config)) {
        std::printf("%-16s %12.4f %12.4f\n", r.kernel.c_str(), r.mean_ms,
                    r.std_ms);
      }
    } else if (config.subcommand == "export") {
      cmd_export(config);
      std::cout << "wrote " << config.out << "/shapes.csv and "
                << config.out << "/pwlu_params.json\n";
    }
    return 0;
  } catch (const CLI::CallForHelp&) {
    std::cout << help_text();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error code=" << error_code_name(e.code())
              << " message=" << one_line(e.what()) << "\n";
    return e.code() == ErrorCode::kInvalidConfig ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error code=internal message=" << one_line(e.what()) << "\n";
    return 1;
  }
}

}  // namespace pwlu::cli
