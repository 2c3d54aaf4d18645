#include "pwlu/stat_align.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include "pwlu/error.hpp"
#include "pwlu/format.hpp"

namespace pwlu {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Nearest rank for a percentile given in whole percent: ceil(p/100 * n).
std::size_t nearest_rank(std::size_t percent, std::size_t n) {
  const std::size_t rank = (percent * n + 99) / 100;
  return std::max<std::size_t>(rank, 1);
}

}  // namespace

RunningStats update_stats(const RunningStats& stats,
                          std::span<const double> batch, double momentum) {
  if (batch.empty()) {
    throw Error(ErrorCode::kEmptyBatch, "update_stats: empty batch");
  }
  double sum = 0.0;
  for (double v : batch) sum += v;
  const double mean = sum / static_cast<double>(batch.size());
  double sq = 0.0;
  for (double v : batch) sq += (v - mean) * (v - mean);
  const double std = std::sqrt(sq / static_cast<double>(batch.size()));

  RunningStats next;
  next.mean = stats.mean * momentum + mean * (1.0 - momentum);
  next.std = stats.std * momentum + std * (1.0 - momentum);
  next.update_count = stats.update_count + 1;
  return next;
}

RealignResult realign(const PwluParams& params, const RunningStats& stats) {
  if (stats.update_count == 0) {
    throw Error(ErrorCode::kInsufficientSamples,
                "realign requires at least one statistics update");
  }
  if (!std::isfinite(stats.mean) || !std::isfinite(stats.std)) {
    throw Error(ErrorCode::kDegenerateParams, "non-finite running statistics");
  }
  RealignResult result;
  PwluParams& p = result.params;
  p.n_intervals = params.n_intervals;
  if (stats.std < kDegenerateSigma) {
    result.degenerate = true;
    p.left_boundary = stats.mean - kDegenerateHalfWidth;
    p.right_boundary = stats.mean + kDegenerateHalfWidth;
  } else {
    p.left_boundary = stats.mean - kSigmaMultiplier * stats.std;
    p.right_boundary = stats.mean + kSigmaMultiplier * stats.std;
  }
  p.left_slope = 0.0;
  p.right_slope = 1.0;
  p.y_points.resize(static_cast<std::size_t>(p.n_intervals) + 1);
  for (int j = 0; j <= p.n_intervals; ++j) {
    p.y_points[j] = std::max(p.grid_point(j), 0.0);
  }
  validate(p);
  return result;
}

PwluParams realign_reset(const PwluParams& params, const RunningStats& stats) {
  RealignResult result = realign(params, stats);
  if (result.degenerate) {
    std::clog << "warning: running std " << stats.std
              << " is degenerate; realigning to mean +/- "
              << kDegenerateHalfWidth << "\n";
  }
  return std::move(result.params);
}

double compute_iou(const Interval& a, const Interval& b) {
  if (!(a.left <= a.right) || !(b.left <= b.right)) {
    throw Error(ErrorCode::kInvalidArgument,
                "compute_iou: interval left end exceeds right end");
  }
  const double inter =
      std::max(0.0, std::min(a.right, b.right) - std::max(a.left, b.left));
  const double uni = a.length() + b.length() - inter;
  if (!(uni > 0.0)) return a == b ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Interval percentile_interval(std::span<const double> samples) {
  if (samples.size() < kMinPercentileSamples) {
    throw Error(ErrorCode::kInsufficientSamples,
                "percentile_interval needs at least " +
                    std::to_string(kMinPercentileSamples) + " samples, got " +
                    std::to_string(samples.size()));
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return {sorted[nearest_rank(5, n) - 1], sorted[nearest_rank(95, n) - 1]};
}

Reservoir::Reservoir(std::uint64_t seed, std::size_t capacity)
    : seed_(seed), capacity_(capacity) {
  if (capacity_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "reservoir capacity must be > 0");
  }
}

void Reservoir::add(double value) {
  if (samples_.size() < capacity_) {
    samples_.push_back(value);
  } else {
    const std::uint64_t j =
        splitmix64(seed_ ^ splitmix64(seen_)) % (seen_ + 1);
    if (j < capacity_) samples_[j] = value;
  }
  ++seen_;
}

void Reservoir::add(std::span<const double> values) {
  for (double v : values) add(v);
}

void Reservoir::clear() {
  seen_ = 0;
  samples_.clear();
}

void Reservoir::restore(std::uint64_t seen, std::vector<double> samples) {
  if (samples.size() > capacity_ || samples.size() > seen) {
    throw Error(ErrorCode::kFormat, "reservoir state is inconsistent");
  }
  seen_ = seen;
  samples_ = std::move(samples);
}

double AlignmentReport::mean_iou() const {
  if (units.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& u : units) sum += u.iou;
  return sum / static_cast<double>(units.size());
}

double AlignmentReport::min_iou() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& u : units) m = std::min(m, u.iou);
  return m;
}

UnitAlignment measure_alignment(std::string layer_name, std::size_t unit_index,
                                const PwluParams& params,
                                std::span<const double> samples) {
  UnitAlignment u;
  u.layer_name = std::move(layer_name);
  u.unit_index = unit_index;
  u.boundary = {params.left_boundary, params.right_boundary};
  u.input = percentile_interval(samples);
  u.iou = compute_iou(u.boundary, u.input);
  return u;
}

void write_alignment_csv(const AlignmentReport& report, std::ostream& out) {
  out << "layer_name,unit_index,b_l,b_r,p05,p95,iou\n";
  for (const auto& u : report.units) {
    out << u.layer_name << ',' << u.unit_index << ',' << fmt_double(u.boundary.left)
        << ',' << fmt_double(u.boundary.right) << ','
        << fmt_double(u.input.left) << ',' << fmt_double(u.input.right) << ','
        << fmt_double(u.iou) << '\n';
  }
}

void write_alignment_csv(const AlignmentReport& report,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  }
  write_alignment_csv(report, out);
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

}  // namespace pwlu
