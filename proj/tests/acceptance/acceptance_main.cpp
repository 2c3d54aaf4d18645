// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes. Tolerances and workload sizes are fixed here and
// must not be relaxed to make a run pass.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "pwlu/cli/commands.hpp"
#include "pwlu/cli/config.hpp"
#include "pwlu/error.hpp"
#include "pwlu/kernel.hpp"
#include "pwlu/nn/checkpoint.hpp"
#include "pwlu/nn/layers.hpp"
#include "pwlu/nn/pwlu_layer.hpp"
#include "pwlu/nn/trainer.hpp"
#include "support/oracles.hpp"

namespace {

namespace fs = std::filesystem;
using namespace pwlu;
using pwlu::testing::kEps;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double time_limit_s;
  std::function<Outcome()> run;
};

fs::path work_dir() {
  const char* root = std::getenv("PWLU_ACCEPTANCE_TMP");
  fs::path dir = root ? fs::path(root) : fs::temp_directory_path() / "pwlu_acceptance";
  fs::create_directories(dir);
  return dir;
}

// ---- 1: analytic gradients against central differences ---------------------

Outcome gradient_oracle() {
  constexpr int kConfigs = 1000;
  constexpr double kStep = 1e-5;
  constexpr double kRel = 1e-4;
  constexpr double kAbs = 1e-7;
  std::mt19937_64 rng(1001);
  std::size_t checked = 0, failures = 0;
  double worst_rel = 0.0;
  std::string first_failure;
  for (int c = 0; c < kConfigs; ++c) {
    const PwluParams p = pwlu::testing::random_params(rng);
    const double x = pwlu::testing::sample_off_grid(p, rng);
    PwluGrads g = PwluGrads::zeros_like(p);
    const double xs[1] = {x};
    const double up[1] = {1.0};
    double dx[1] = {0.0};
    accumulate_backward(xs, up, p, g, dx);

    const auto check = [&](const std::string& name, double analytic,
                           double numeric) {
      ++checked;
      const double err = std::abs(analytic - numeric);
      const double denom = std::max(std::abs(analytic), std::abs(numeric));
      if (err > kAbs && denom > 0.0) worst_rel = std::max(worst_rel, err / denom);
      if (!pwlu::testing::gradient_close(analytic, numeric, kRel, kAbs)) {
        if (failures++ == 0) {
          first_failure = fmt::format("config {} {}: analytic {} numeric {}", c,
                                      name, analytic, numeric);
        }
      }
    };
    for (std::size_t k = 0; k < pwlu::testing::trainable_count(p); ++k) {
      check(pwlu::testing::trainable_name(k), pwlu::testing::trainable(g, k),
            pwlu::testing::central_difference(p, k, x, kStep));
    }
    check("x", dx[0], pwlu::testing::central_difference_x(p, x, kStep));
  }
  Outcome o;
  o.pass = failures == 0;
  o.detail = fmt::format("{} configs, {} partials, {} outside tolerance, worst "
                         "relative error above abs floor {:.2e}",
                         kConfigs, checked, failures, worst_rel);
  if (failures) o.detail += "; first: " + first_failure;
  return o;
}

// ---- 2: reference forward against a linear-scan oracle ----------------------

Outcome branch_oracle() {
  constexpr int kConfigs = 10;
  constexpr std::size_t kPoints = 100'000;
  constexpr double kUlps = 4.0;
  std::mt19937_64 rng(2002);
  std::size_t failures = 0;
  double worst = 0.0;  // in units of eps * scale
  for (int c = 0; c < kConfigs; ++c) {
    const PwluParams p = pwlu::testing::random_params(rng);
    for (double x : pwlu::testing::sample_around(p, kPoints, rng)) {
      const double err = std::abs(forward_reference(x, p) -
                                  pwlu::testing::linear_scan_oracle(x, p));
      const double ratio = err / (kEps * pwlu::testing::rounding_scale(x, p));
      worst = std::max(worst, ratio);
      if (ratio > kUlps) ++failures;
    }
  }
  return {failures == 0,
          fmt::format("{} configs x {} points, {} beyond {} eps, worst {:.2f} eps",
                      kConfigs, kPoints, failures, kUlps, worst)};
}

// ---- 3: fused kernel against the reference ----------------------------------

Outcome fused_equivalence() {
  constexpr int kConfigs = 10;
  constexpr std::size_t kPoints = 100'000;
  constexpr double kUlps = 8.0;
  std::mt19937_64 rng(3003);
  std::size_t failures = 0, branch_failures = 0, special = 0;
  double worst = 0.0;
  for (int c = 0; c < kConfigs; ++c) {
    const PwluParams p = pwlu::testing::random_params(rng);
    const auto table = build_fused<double>(p);
    std::vector<double> xs = pwlu::testing::sample_around(p, kPoints, rng);
    xs.push_back(p.left_boundary);
    xs.push_back(p.right_boundary);
    for (int j = 0; j <= p.n_intervals; ++j) {
      xs.push_back(p.grid_point(j));
      xs.push_back(pwlu::testing::oracle_grid_point(p, j));
    }
    special += 2 + 2 * static_cast<std::size_t>(p.n_intervals + 1);
    std::vector<double> fused(xs.size());
    forward_fused<double>(xs, table, fused);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double x = xs[i];
      const double err = std::abs(fused[i] - forward_reference(x, p));
      const double ratio = err / (kEps * pwlu::testing::rounding_scale(x, p));
      worst = std::max(worst, ratio);
      if (ratio > kUlps) ++failures;
      // The fused slot must be the branch the reference evaluates.
      const int want = x < p.left_boundary     ? -1
                       : x >= p.right_boundary ? p.n_intervals
                                               : interval_index(x, p);
      if (table.extended_index(x) != want) ++branch_failures;
    }
    if (table.extended_index(p.left_boundary) != 0 ||
        table.extended_index(p.right_boundary) != p.n_intervals) {
      ++branch_failures;
    }
  }
  return {failures == 0 && branch_failures == 0,
          fmt::format("{} configs x ({} random + boundary/grid points, {} "
                      "special in total), {} beyond {} eps, {} branch "
                      "mismatches, worst {:.2f} eps",
                      kConfigs, kPoints, special, failures, kUlps,
                      branch_failures, worst)};
}

// ---- 4: ReLU initialization reproduces max(x, 0) ----------------------------

Outcome relu_exactness() {
  constexpr std::size_t kSamples = 10'000;
  std::mt19937_64 rng(4004);
  std::normal_distribution<double> near(0.0, 4.0);
  std::uniform_real_distribution<double> wide(-1e6, 1e6);
  std::vector<double> xs;
  xs.reserve(kSamples);
  while (xs.size() < kSamples) {
    double x = 0.0;
    switch (xs.size() % 3) {
      case 0: x = near(rng); break;
      case 1: x = wide(rng); break;
      default: x = std::bit_cast<double>(rng()); break;  // any magnitude
    }
    if (std::isfinite(x)) xs.push_back(x);
  }
  std::size_t mismatches = 0, configs = 0;
  for (int n : {2, 4, 8, 16, 20, 64}) {
    for (double hw : {1.0, 3.0, 10.0}) {
      ++configs;
      const PwluParams p = init_pwlu_relu(n, hw);
      const auto table = build_fused<double>(p);
      for (double x : xs) {
        const std::uint64_t want = std::bit_cast<std::uint64_t>(x > 0.0 ? x : 0.0);
        if (std::bit_cast<std::uint64_t>(forward_reference(x, p)) != want) ++mismatches;
        if (std::bit_cast<std::uint64_t>(table.evaluate(x)) != want) ++mismatches;
      }
    }
  }
  return {mismatches == 0,
          fmt::format("{} doubles x {} (N, half-width) inits x reference and "
                      "fused, {} bitwise mismatches",
                      kSamples, configs, mismatches)};
}

// ---- 5: statistics-based realignment -----------------------------------------

Outcome realignment_contract() {
  constexpr std::size_t kSamples = 2048;
  constexpr std::size_t kChannels = 8;
  std::mt19937_64 rng(5005);
  std::normal_distribution<double> dist(5.0, 1.0);
  data::LabeledDataset train;
  train.features = Tensor({kSamples, kChannels});
  for (double& v : train.features.values()) v = dist(rng);
  for (std::size_t i = 0; i < kSamples; ++i) {
    train.labels.push_back(train.features[kChannels * i] > 5.0 ? 1 : 0);
  }
  train.num_classes = 2;
  train.split = "train";

  nn::Model model;
  model.add(std::make_unique<nn::PwluLayer>("act1", nn::Granularity::kChannel,
                                            kChannels, init_pwlu_relu(16, 3.0), 5));
  auto head = std::make_unique<nn::Dense>("output", kChannels, 2);
  std::mt19937_64 wrng(6);
  head->init_he_uniform(wrng);
  model.add(std::move(head));

  // Zero learning rate keeps the whole network frozen; only the reset at T'
  // changes anything. Phase I lasts the default T' of five epochs.
  nn::TrainSchedule s;
  s.batch_size = 64;
  s.realign_iteration = 5 * (kSamples / 64);
  s.total_iterations = s.realign_iteration + 1;
  s.base_lr = 0.0;
  s.seed = 5;
  const nn::TrainResult r = nn::train_two_phase(model, train, nullptr, s);
  if (!r.pre_reset || !r.post_reset) return {false, "no alignment reports"};

  std::size_t bad = 0;
  double lo_min = 1e9, lo_max = -1e9, hi_min = 1e9, hi_max = -1e9;
  double pre_max = 0.0, post_min = 1.0;
  for (std::size_t i = 0; i < r.post_reset->units.size(); ++i) {
    const auto& post = r.post_reset->units[i];
    const auto& pre = r.pre_reset->units[i];
    lo_min = std::min(lo_min, post.boundary.left);
    lo_max = std::max(lo_max, post.boundary.left);
    hi_min = std::min(hi_min, post.boundary.right);
    hi_max = std::max(hi_max, post.boundary.right);
    pre_max = std::max(pre_max, pre.iou);
    post_min = std::min(post_min, post.iou);
    if (std::abs(post.boundary.left - 2.0) > 0.2 ||
        std::abs(post.boundary.right - 8.0) > 0.2 || !(pre.iou < 0.2) ||
        !(post.iou >= 0.5)) {
      ++bad;
    }
  }
  return {bad == 0 && r.post_reset->units.size() == kChannels,
          fmt::format("{} units: B_L in [{:.3f}, {:.3f}], B_R in [{:.3f}, "
                      "{:.3f}], IOU pre max {:.3f}, post min {:.3f}, {} units "
                      "out of contract",
                      r.post_reset->units.size(), lo_min, lo_max, hi_min,
                      hi_max, pre_max, post_min, bad)};
}

// ---- 6: two-phase training direction on spirals -------------------------------

struct VariantStats {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation over seeds
  std::vector<std::uint64_t> correct;
};

VariantStats train_variant(const std::string& activation, const std::string& realign) {
  constexpr int kSeeds = 5;
  VariantStats v;
  std::vector<double> acc;
  for (int seed = 0; seed < kSeeds; ++seed) {
    cli::RunConfig c;
    c.subcommand = "train";
    c.activation = activation;
    c.realign = realign;
    c.arch = "32,32";
    c.seed = static_cast<std::uint64_t>(seed);
    c.validate();
    const cli::DataSplits data = cli::load_data(c);
    nn::Model model = nn::build_model(cli::model_spec(c, data));
    nn::train_two_phase(model, data.train, nullptr,
                        cli::schedule_for(c, data.train.size()));
    const double a = nn::evaluate(model, data.test).accuracy;
    v.correct.push_back(static_cast<std::uint64_t>(std::llround(a * data.test.size())));
    acc.push_back(a);
  }
  v.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / kSeeds;
  double ss = 0.0;
  for (double a : acc) ss += (a - v.mean) * (a - v.mean);
  v.sd = std::sqrt(ss / (kSeeds - 1));
  return v;
}

Outcome two_phase_direction() {
  const VariantStats relu = train_variant("relu", "off");
  const VariantStats fix = train_variant("pwlu", "off");
  const VariantStats stat = train_variant("pwlu", "on");
  // Integer totals keep ties exact.
  const auto total = [](const VariantStats& v) {
    return std::accumulate(v.correct.begin(), v.correct.end(), std::uint64_t{0});
  };
  const double seed_sd = std::max(relu.sd, stat.sd);
  const bool stat_ge_fix = total(stat) >= total(fix);
  const bool fix_ge_relu = fix.mean >= relu.mean - 0.005;
  const bool margin = stat.mean - relu.mean >= seed_sd && total(stat) > total(relu);
  return {stat_ge_fix && fix_ge_relu && margin,
          fmt::format("test acc over 5 seeds: stat-realign {:.4f} (sd {:.4f}), "
                      "fix-init {:.4f} (sd {:.4f}), relu {:.4f} (sd {:.4f}); "
                      "stat>=fix {}, fix>=relu-0.5% {}, stat-relu {:.4f} >= "
                      "seed sd {:.4f} {}",
                      stat.mean, stat.sd, fix.mean, fix.sd, relu.mean, relu.sd,
                      stat_ge_fix, fix_ge_relu, stat.mean - relu.mean, seed_sd,
                      margin)};
}

// ---- 7: interval-count sweep ----------------------------------------------------

bool metrics_finite(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  if (!std::getline(in, line)) return false;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string field;
    for (int col = 0; std::getline(ss, field, ','); ++col) {
      if (!std::isfinite(std::stod(field))) return false;
    }
    ++rows;
  }
  return rows > 0;
}

Outcome n_sweep() {
  cli::RunConfig c;
  c.subcommand = "sweep";
  c.out = (work_dir() / "sweep").string();
  c.validate();
  const std::vector<int> grid = cli::parse_n_list(c.n_list);
  const auto rows = cli::cmd_sweep_n(c, grid);
  bool ok = rows.size() == grid.size();
  std::string table;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const bool finite =
        r.ok && metrics_finite(fs::path(c.out) / ("n" + std::to_string(r.n_intervals)) /
                               "metrics.csv");
    ok = ok && r.n_intervals == grid[i] && finite;
    table += fmt::format("{}N={} acc {:.4f}{}", i ? ", " : "", r.n_intervals,
                         r.test_accuracy, finite ? "" : " NON-FINITE/FAILED");
  }
  return {ok, fmt::format("{} rows for {} N values: {}", rows.size(), grid.size(), table)};
}

// ---- 8: determinism and resume ------------------------------------------------

std::string serialize(nn::Model& m, const nn::TrainerState& s) {
  std::ostringstream out;
  nn::write_checkpoint(out, m, s);
  return out.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism_and_resume() {
  // Same seed, two independent CLI runs.
  cli::RunConfig c;
  c.subcommand = "train";
  c.spiral_points = 200;
  c.epochs = 8;
  c.t_prime_epochs = 2;
  c.out = (work_dir() / "det_a").string();
  cli::cmd_train(c);
  c.out = (work_dir() / "det_b").string();
  cli::cmd_train(c);
  const bool csv_same = slurp(work_dir() / "det_a" / "metrics.csv") ==
                        slurp(work_dir() / "det_b" / "metrics.csv");

  // Resume at every iteration of a short run.
  cli::RunConfig r;
  r.spiral_points = 100;
  r.arch = "16,16";
  r.epochs = 10;
  r.t_prime_epochs = 3;
  r.validate();
  const cli::DataSplits data = cli::load_data(r);
  const nn::ModelSpec spec = cli::model_spec(r, data);
  const nn::TrainSchedule sched = cli::schedule_for(r, data.train.size());

  nn::Model straight = nn::build_model(spec);
  nn::Trainer ts(straight, data.train, &data.test, sched);
  ts.run();
  const std::string want = serialize(straight, ts.state());

  std::size_t mismatched = 0;
  for (std::uint64_t t = 0; t <= sched.total_iterations; ++t) {
    nn::Model first = nn::build_model(spec);
    nn::Trainer t1(first, data.train, &data.test, sched);
    t1.run_until(t);
    std::stringstream buf;
    nn::write_checkpoint(buf, first, t1.state());
    nn::Checkpoint ck = nn::read_checkpoint(buf);
    nn::Trainer t2(ck.model, data.train, &data.test, ck.state);
    t2.run();
    if (serialize(ck.model, t2.state()) != want) ++mismatched;
  }
  return {csv_same && mismatched == 0,
          fmt::format("metrics CSV identical across runs: {}; resumed at all {} "
                      "iterations 0..{}, {} final checkpoints differ from the "
                      "straight run",
                      csv_same, sched.total_iterations + 1,
                      sched.total_iterations, mismatched)};
}

// ---- 9: inference latency ordering ----------------------------------------------

Outcome inference_ordering() {
  cli::RunConfig c;
  c.subcommand = "bench";
  c.bench_elements = 1'000'000;
  c.out = (work_dir() / "bench").string();
  c.validate();
  const auto rows = cli::cmd_bench(c);
  double relu = 0, ref = 0, fused = 0, fused32 = 0;
  for (const auto& r : rows) {
    if (r.kernel == "relu") relu = r.mean_ms;
    if (r.kernel == "pwlu_reference") ref = r.mean_ms;
    if (r.kernel == "pwlu_fused") fused = r.mean_ms;
    if (r.kernel == "pwlu_fused_f32") fused32 = r.mean_ms;
  }
  return {fused > 0.0 && fused <= ref,
          fmt::format("{} elements x {} reps, mean ms: relu {:.3f}, reference "
                      "{:.3f}, fused {:.3f}, fused f32 {:.3f}",
                      c.bench_elements, c.repetitions, relu, ref, fused, fused32)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "gradient oracle", 10.0, gradient_oracle},
      {2, "branch oracle equivalence", 5.0, branch_oracle},
      {3, "fused path equivalence", 5.0, fused_equivalence},
      {4, "ReLU exactness at initialization", 60.0, relu_exactness},
      {5, "realignment contract", 120.0, realignment_contract},
      {6, "two-phase training direction", 600.0, two_phase_direction},
      {7, "N-sweep harness", 1800.0, n_sweep},
      {8, "determinism and persistence", 600.0, determinism_and_resume},
      {9, "inference ordering benchmark", 600.0, inference_ordering},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    fmt::print("{} [{}] {}: {} ({:.2f} s, limit {:.0f} s{})\n",
               pass ? "PASS" : "FAIL", c.id, c.title, o.detail, secs,
               c.time_limit_s, in_time ? "" : ", EXCEEDED");
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
