#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pwlu/cli/commands.hpp"
#include "pwlu/cli/config.hpp"
#include "pwlu/error.hpp"
#include "pwlu/nn/checkpoint.hpp"

namespace pwlu::cli {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const char* root = std::getenv("PWLU_TEST_TMP");
  fs::path dir = fs::path(root ? root : fs::temp_directory_path()) /
                 ("cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& path) {
  const std::string text = slurp(path);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// Expects kInvalidConfig with a message that names `field`.
void expect_rejected(const std::vector<std::string>& args,
                     const std::string& field) {
  try {
    parse_run_config(args);
    ADD_FAILURE() << "accepted invalid config, expected complaint about "
                  << field;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    EXPECT_NE(std::string(e.what()).find(field), std::string::npos)
        << e.what();
  }
}

// Small, fast spirals run.
RunConfig tiny(const fs::path& out) {
  RunConfig c;
  c.subcommand = "train";
  c.spiral_points = 60;
  c.arch = "8,8";
  c.n_intervals = 8;
  c.epochs = 4;
  c.t_prime_epochs = 1;
  c.batch_size = 16;
  c.out = out.string();
  return c;
}

// ---- parsing and validation -------------------------------------------------

TEST(Config, DefaultsFollowDocumentedValues) {
  const RunConfig c = parse_run_config({"train"});
  EXPECT_EQ(c.subcommand, "train");
  EXPECT_EQ(c.n_intervals, 16);
  EXPECT_EQ(c.granularity, "channel");
  EXPECT_EQ(c.t_prime_epochs, 5u);
  EXPECT_EQ(c.momentum, 0.9);
  EXPECT_EQ(c.realign, "on");
  EXPECT_EQ(c.repetitions, 500u);
  EXPECT_EQ(c.n_list, "4,8,12,16,20");
}

TEST(Config, FlagsOverrideDefaults) {
  const RunConfig c = parse_run_config(
      {"train", "--activation", "relu", "--arch", "16,c4", "--lr", "0.2",
       "--seed", "9", "--out", "x", "--granularity", "layer"});
  EXPECT_EQ(c.activation, "relu");
  EXPECT_EQ(c.arch, "16,c4");
  EXPECT_EQ(c.lr, 0.2);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.out, "x");
  EXPECT_EQ(c.granularity, "layer");
}

TEST(Config, FlagsAfterSubcommandOrBefore) {
  EXPECT_EQ(parse_run_config({"--epochs", "3", "train", "--t-prime-epochs", "1"})
                .epochs,
            3u);
}

TEST(Config, RealignNeedsTPrimeBelowEpochs) {
  expect_rejected({"train", "--epochs", "5", "--t-prime-epochs", "5"},
                  "t-prime-epochs");
  expect_rejected({"train", "--epochs", "5", "--t-prime-epochs", "0"},
                  "t-prime-epochs");
  EXPECT_NO_THROW(parse_run_config(
      {"train", "--epochs", "5", "--t-prime-epochs", "5", "--realign", "off"}));
  EXPECT_NO_THROW(parse_run_config(
      {"train", "--epochs", "5", "--t-prime-epochs", "9", "--activation",
       "relu"}));
}

TEST(Config, RejectionsNameTheField) {
  expect_rejected({"train", "--activation", "gelu"}, "activation");
  expect_rejected({"train", "--n-intervals", "7"}, "n-intervals");
  expect_rejected({"train", "--n-intervals", "0"}, "n-intervals");
  expect_rejected({"train", "--granularity", "unit"}, "granularity");
  expect_rejected({"train", "--realign", "maybe"}, "realign");
  expect_rejected({"train", "--half-width", "0"}, "half-width");
  expect_rejected({"train", "--dataset", "mnist"}, "dataset");
  expect_rejected({"train", "--dataset", "idx:"}, "dataset");
  expect_rejected({"train", "--arch", "8,,8"}, "arch");
  expect_rejected({"train", "--lr", "-1"}, "lr");
  expect_rejected({"train", "--momentum", "1"}, "momentum");
  expect_rejected({"train", "--batch-size", "0"}, "batch-size");
  expect_rejected({"train", "--spiral-points", "0"}, "spiral-points");
  expect_rejected({"bench", "--repetitions", "0"}, "repetitions");
  expect_rejected({"sweep", "--n-list", "4,4"}, "n-list");
  expect_rejected({"train", "--epochs", "many"}, "--epochs");
  expect_rejected({"train", "--no-such-flag", "1"}, "--no-such-flag");
  expect_rejected({}, "subcommand");
}

TEST(NList, ParsesCommaSeparatedEvenValues) {
  EXPECT_EQ(parse_n_list("4,8,12,16,20"), (std::vector<int>{4, 8, 12, 16, 20}));
  EXPECT_EQ(parse_n_list("2"), (std::vector<int>{2}));
}

TEST(NList, RejectsBadLists) {
  for (const char* text : {"", "4,4", "3", "0", "-2", "4,x", "4,,8", "8 "}) {
    try {
      parse_n_list(text);
      ADD_FAILURE() << "accepted '" << text << "'";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig) << text;
    }
  }
}

// ---- config files ---------------------------------------------------------

TEST(ConfigFile, PrecedenceIsFlagsThenFileThenDefaults) {
  const fs::path dir = scratch_dir("precedence");
  std::ofstream(dir / "run.ini") << "epochs = 7\nlr = 0.2\narch = \"4,4\"\n";
  const RunConfig c = parse_run_config(
      {"train", "--config", (dir / "run.ini").string(), "--lr", "0.3"});
  EXPECT_EQ(c.lr, 0.3);        // flag
  EXPECT_EQ(c.epochs, 7u);     // file
  EXPECT_EQ(c.arch, "4,4");    // file
  EXPECT_EQ(c.seed, 0u);       // default
}

TEST(ConfigFile, ResolvedTextRoundTrips) {
  RunConfig c;
  c.subcommand = "train";
  c.arch = "12,c3";
  c.lr = 0.1 / 3.0;
  c.spiral_noise = 0.0;
  c.half_width = 10.0;
  c.realign = "off";
  c.granularity = "layer";
  c.seed = 42;
  c.n_list = "4,8";
  c.out = "some dir";
  const fs::path dir = scratch_dir("roundtrip");
  std::ofstream(dir / "config.ini") << config_to_text(c);
  const RunConfig back =
      parse_run_config({"train", "--config", (dir / "config.ini").string()});
  EXPECT_EQ(config_to_text(back), config_to_text(c));
  EXPECT_EQ(back.lr, c.lr);
}

TEST(ConfigFile, MissingFileIsRejected) {
  expect_rejected({"train", "--config", "/nonexistent/run.ini"}, "run.ini");
}

// ---- train ----------------------------------------------------------------

TEST(Train, WritesDocumentedOutputs) {
  const fs::path dir = scratch_dir("train");
  const TrainOutcome o = cmd_train(tiny(dir));
  for (const char* f : {"config.ini", "metrics.csv", "checkpoint.bin",
                        "alignment_pre.csv", "alignment_post.csv",
                        "alignment_final.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(line_count(dir / "metrics.csv"), 1u + 4u);
  const std::string metrics = slurp(dir / "metrics.csv");
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')),
            "epoch,iteration,lr,train_loss,train_acc,test_loss,test_acc");
  EXPECT_TRUE(o.result.pre_reset.has_value());
  EXPECT_GT(o.final_test.accuracy, 0.0);
}

TEST(Train, SameConfigSameBytes) {
  const fs::path a = scratch_dir("det_a");
  const fs::path b = scratch_dir("det_b");
  cmd_train(tiny(a));
  cmd_train(tiny(b));
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "checkpoint.bin"), slurp(b / "checkpoint.bin"));
  EXPECT_EQ(slurp(a / "alignment_post.csv"), slurp(b / "alignment_post.csv"));
}

TEST(Train, EchoedConfigReproducesRun) {
  const fs::path a = scratch_dir("echo_a");
  const fs::path b = scratch_dir("echo_b");
  RunConfig c = tiny(a);
  c.lr = 0.07;
  c.activation = "swish";
  cmd_train(c);
  const RunConfig again = parse_run_config(
      {"train", "--config", (a / "config.ini").string(), "--out", b.string()});
  cmd_train(again);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
}

TEST(Train, ZeroEpochsCheckpointsInitialization) {
  const fs::path dir = scratch_dir("zero");
  RunConfig c = tiny(dir);
  c.epochs = 0;
  cmd_train(c);
  nn::Checkpoint ck = nn::load_checkpoint((dir / "checkpoint.bin").string());
  nn::Model fresh = nn::build_model(model_spec(c, load_data(c)));
  std::ostringstream saved, expected;
  nn::write_checkpoint(saved, ck.model, nn::TrainerState{});
  nn::write_checkpoint(expected, fresh, nn::TrainerState{});
  EXPECT_EQ(saved.str(), expected.str());
  EXPECT_EQ(ck.state.iteration, 0u);
  EXPECT_EQ(line_count(dir / "metrics.csv"), 1u);
}

TEST(Train, FixInitTenEmulation) {
  const fs::path dir = scratch_dir("fix10");
  const RunConfig c = parse_run_config(
      {"train", "--activation", "pwlu", "--realign", "off", "--half-width",
       "10", "--epochs", "0", "--arch", "4", "--spiral-points", "10", "--out",
       dir.string()});
  cmd_train(c);
  nn::Checkpoint ck = nn::load_checkpoint((dir / "checkpoint.bin").string());
  for (nn::PwluLayer* l : ck.model.pwlu_layers()) {
    for (const PwluParams& p : l->units()) {
      EXPECT_EQ(p.left_boundary, -10.0);
      EXPECT_EQ(p.right_boundary, 10.0);
    }
  }
  EXPECT_EQ(schedule_for(c, 20).realign_iteration, 0u);
  EXPECT_FALSE(fs::exists(dir / "alignment_pre.csv"));
}

TEST(Train, TPrimeConvertsEpochsToIterations) {
  RunConfig c;
  c.batch_size = 32;
  c.t_prime_epochs = 5;
  c.epochs = 40;
  const nn::TrainSchedule s = schedule_for(c, 1000);  // 32 batches per epoch
  EXPECT_EQ(s.realign_iteration, 160u);
  EXPECT_EQ(s.total_iterations, 1280u);
  c.activation = "relu";
  EXPECT_EQ(schedule_for(c, 1000).realign_iteration, 0u);
}

TEST(Train, ResumeContinuesSavedRun) {
  const fs::path a = scratch_dir("resume_a");
  const fs::path b = scratch_dir("resume_b");
  RunConfig c = tiny(a);
  cmd_train(c);
  // A finished run resumed for zero further iterations saves the same bytes.
  RunConfig r = tiny(b);
  r.resume = (a / "checkpoint.bin").string();
  cmd_train(r);
  EXPECT_EQ(slurp(a / "checkpoint.bin"), slurp(b / "checkpoint.bin"));
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
}

// ---- sweep ----------------------------------------------------------------

TEST(Sweep, SingleNDegeneratesToOneTrainRun) {
  const fs::path dir = scratch_dir("sweep1");
  RunConfig c = tiny(dir);
  c.subcommand = "sweep";
  const auto rows = cmd_sweep_n(c, {8});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].ok);
  EXPECT_EQ(line_count(dir / "sweep.csv"), 2u);

  const fs::path single = scratch_dir("sweep1_train");
  const TrainOutcome o = cmd_train(tiny(single));
  EXPECT_EQ(rows[0].test_accuracy, o.final_test.accuracy);
  EXPECT_EQ(slurp(dir / "n8" / "metrics.csv"), slurp(single / "metrics.csv"));
}

TEST(Sweep, FailedRunIsRecordedAndSweepContinues) {
  const fs::path dir = scratch_dir("sweep_fail");
  RunConfig c = tiny(dir);
  c.subcommand = "sweep";
  c.lr = 1e300;
  const auto rows = cmd_sweep_n(c, {4, 6});
  ASSERT_EQ(rows.size(), 2u);
  for (const SweepRow& r : rows) {
    EXPECT_FALSE(r.ok);
    EXPECT_FALSE(r.error.empty());
  }
  EXPECT_EQ(line_count(dir / "sweep.csv"), 3u);
}

TEST(Sweep, RejectsDuplicateN) {
  RunConfig c = tiny(scratch_dir("sweep_dup"));
  EXPECT_THROW(cmd_sweep_n(c, {4, 8, 4}), Error);
}

// ---- bench and export -------------------------------------------------------

TEST(Bench, SingleRepetitionGivesSingleTimingRow) {
  const fs::path dir = scratch_dir("bench");
  RunConfig c;
  c.subcommand = "bench";
  c.bench_elements = 1000;
  c.repetitions = 1;
  c.out = dir.string();
  const auto rows = cmd_bench(c);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].kernel, "relu");
  for (const BenchRow& r : rows) EXPECT_EQ(r.std_ms, 0.0);
  EXPECT_EQ(line_count(dir / "bench.csv"), 2u);
  EXPECT_EQ(slurp(dir / "bench.csv").substr(0, 18), "repetition,relu_ms");
  EXPECT_EQ(line_count(dir / "bench_summary.csv"), 5u);
}

TEST(Bench, UsesCheckpointParameters) {
  const fs::path dir = scratch_dir("bench_ck");
  cmd_train(tiny(dir / "run"));
  RunConfig c;
  c.bench_elements = 100;
  c.repetitions = 3;
  c.checkpoint = (dir / "run" / "checkpoint.bin").string();
  c.out = dir.string();
  EXPECT_EQ(cmd_bench(c).size(), 4u);
  EXPECT_EQ(line_count(dir / "bench.csv"), 4u);
}

TEST(Export, FreshModelExportsRelu) {
  const fs::path dir = scratch_dir("export");
  RunConfig c = tiny(dir);
  c.subcommand = "export";
  cmd_export(c);
  EXPECT_TRUE(fs::exists(dir / "shapes.csv"));
  EXPECT_TRUE(fs::exists(dir / "pwlu_params.json"));
}

TEST(Export, ReluModelHasNothingToExport) {
  RunConfig c = tiny(scratch_dir("export_relu"));
  c.activation = "relu";
  EXPECT_THROW(cmd_export(c), Error);
}

// ---- process entry point --------------------------------------------------

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "pwlu");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

TEST(RunCli, SuccessExitsZero) {
  const fs::path dir = scratch_dir("exit_ok");
  ::testing::internal::CaptureStdout();
  const int code = run({"train", "--spiral-points", "20", "--arch", "4",
                        "--epochs", "2", "--t-prime-epochs", "1", "--out",
                        dir.string()});
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(code, 0);
  EXPECT_NE(out.find("final test accuracy"), std::string::npos);
}

TEST(RunCli, HelpExitsZero) {
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"--help"}), 0);
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("--n-intervals"), std::string::npos);
}

TEST(RunCli, ConfigErrorIsOneMachineReadableLine) {
  ::testing::internal::CaptureStderr();
  const int code = run({"train", "--epochs", "3", "--t-prime-epochs", "3"});
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, 2);
  EXPECT_EQ(err.rfind("error code=invalid_config message=t-prime-epochs", 0), 0u)
      << err;
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);
}

TEST(RunCli, RuntimeErrorExitsNonzero) {
  ::testing::internal::CaptureStderr();
  const int code = run({"train", "--dataset", "idx:/nonexistent", "--out",
                        scratch_dir("exit_io").string()});
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, 1);
  EXPECT_EQ(err.rfind("error code=io message=", 0), 0u) << err;
}

}  // namespace
}  // namespace pwlu::cli
