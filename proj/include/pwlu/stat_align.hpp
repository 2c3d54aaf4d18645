#pragma once

// Input statistics for PWLU units: exponential running mean/std used by the
// 3-sigma boundary reset, plus a bounded reservoir of raw inputs used for the
// percentile-interval IOU alignment diagnostic.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pwlu/kernel.hpp"

namespace pwlu {

inline constexpr double kStatsMomentum = 0.9;
// Below this running std a unit is treated as dead and realigned to a unit
// window around its mean.
inline constexpr double kDegenerateSigma = 1e-8;
inline constexpr double kDegenerateHalfWidth = 0.5;
inline constexpr double kSigmaMultiplier = 3.0;
inline constexpr std::size_t kReservoirCapacity = 4096;
inline constexpr std::size_t kMinPercentileSamples = 20;

struct RunningStats {
  double mean = 0.0;
  double std = 1.0;
  std::uint64_t update_count = 0;

  bool operator==(const RunningStats&) const = default;
};

// mean' = m*mean + (1-m)*mean(batch), std' = m*std + (1-m)*std(batch), where
// std(batch) is the population (biased) standard deviation.
RunningStats update_stats(const RunningStats& stats,
                          std::span<const double> batch,
                          double momentum = kStatsMomentum);

struct RealignResult {
  PwluParams params;
  bool degenerate = false;  // sigma fell below kDegenerateSigma
};

// B_L = mu - 3 sigma, B_R = mu + 3 sigma, K_L = 0, K_R = 1,
// Y_j = max(B_j, 0). N is kept.
RealignResult realign(const PwluParams& params, const RunningStats& stats);

// realign() that logs a warning for degenerate units.
PwluParams realign_reset(const PwluParams& params, const RunningStats& stats);

struct Interval {
  double left = 0.0;
  double right = 0.0;

  double length() const { return right - left; }
  bool operator==(const Interval&) const = default;
};

double compute_iou(const Interval& a, const Interval& b);

// Nearest-rank 5th and 95th percentiles.
Interval percentile_interval(std::span<const double> samples);

// Uniform reservoir sample (Algorithm R). The replacement slot for the k-th
// value is a hash of (seed, k), so the sample depends only on the seed and
// the value sequence.
class Reservoir {
 public:
  explicit Reservoir(std::uint64_t seed = 0,
                     std::size_t capacity = kReservoirCapacity);

  void add(double value);
  void add(std::span<const double> values);
  void clear();

  const std::vector<double>& samples() const { return samples_; }
  std::uint64_t seen() const { return seen_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t capacity() const { return capacity_; }

  // For checkpoint restore.
  void restore(std::uint64_t seen, std::vector<double> samples);

  bool operator==(const Reservoir&) const = default;

 private:
  std::uint64_t seed_;
  std::size_t capacity_;
  std::uint64_t seen_ = 0;
  std::vector<double> samples_;
};

struct UnitAlignment {
  std::string layer_name;
  std::size_t unit_index = 0;
  Interval boundary;
  Interval input;  // [p05, p95]
  double iou = 0.0;
};

struct AlignmentReport {
  std::vector<UnitAlignment> units;

  double mean_iou() const;
  double min_iou() const;
};

UnitAlignment measure_alignment(std::string layer_name, std::size_t unit_index,
                                const PwluParams& params,
                                std::span<const double> samples);

// Columns: layer_name,unit_index,b_l,b_r,p05,p95,iou
void write_alignment_csv(const AlignmentReport& report, std::ostream& out);
void write_alignment_csv(const AlignmentReport& report,
                         const std::string& path);

}  // namespace pwlu
