#include "pwlu/data/dataset.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pwlu/error.hpp"

namespace pwlu::data {

namespace {

// Angular extent of each spiral arm, in turns.
constexpr double kSpiralTurns = 1.5;

}  // namespace

std::vector<std::size_t> LabeledDataset::sample_shape() const {
  const auto& s = features.shape();
  return {s.begin() + 1, s.end()};
}

Tensor LabeledDataset::gather(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> shape = features.shape();
  const std::size_t row = features.size() / std::max<std::size_t>(shape[0], 1);
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double* src = features.data() + indices[i] * row;
    std::copy(src, src + row, out.data() + i * row);
  }
  return out;
}

std::vector<int> LabeledDataset::gather_labels(
    std::span<const std::size_t> indices) const {
  std::vector<int> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels[indices[i]];
  return out;
}

void LabeledDataset::validate() const {
  if (features.rank() < 2) {
    throw Error(ErrorCode::kShapeMismatch,
                "features must be [samples, ...], got " +
                    features.shape_string());
  }
  if (features.dim(0) != labels.size()) {
    throw Error(ErrorCode::kCountMismatch,
                std::to_string(features.dim(0)) + " feature rows but " +
                    std::to_string(labels.size()) + " labels");
  }
  for (int label : labels) {
    if (label < 0 || label >= num_classes) {
      throw Error(ErrorCode::kShapeMismatch,
                  "label " + std::to_string(label) + " outside [0, " +
                      std::to_string(num_classes) + ")");
    }
  }
}

LabeledDataset gen_spirals(std::size_t n_per_class, double noise,
                           std::uint64_t seed) {
  if (n_per_class == 0) {
    throw Error(ErrorCode::kInvalidArgument, "n_per_class must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);

  LabeledDataset data;
  data.num_classes = 2;
  data.split = "train";
  data.features = Tensor({2 * n_per_class, 2});
  data.labels.resize(2 * n_per_class);
  const double extent = 2.0 * std::numbers::pi * kSpiralTurns;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (int c = 0; c < 2; ++c) {
      const std::size_t row = 2 * i + c;
      // sqrt spreads points evenly along the arm's length.
      const double t = std::sqrt(unit(rng)) * extent;
      const double angle = t + c * std::numbers::pi;
      double x = t * std::cos(angle);
      double y = t * std::sin(angle);
      if (noise > 0.0) {
        x += noise * jitter(rng);
        y += noise * jitter(rng);
      }
      data.features[row * 2] = x;
      data.features[row * 2 + 1] = y;
      data.labels[row] = c;
    }
  }
  return data;
}

Standardizer Standardizer::fit(const LabeledDataset& data) {
  const std::size_t n = data.size();
  if (n == 0) {
    throw Error(ErrorCode::kEmptyBatch, "cannot standardize an empty dataset");
  }
  const std::size_t dims = data.features.size() / n;
  Standardizer s;
  s.mean.assign(dims, 0.0);
  s.std.assign(dims, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dims; ++j) s.mean[j] += data.features[i * dims + j];
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dims; ++j) {
      const double dev = data.features[i * dims + j] - s.mean[j];
      s.std[j] += dev * dev;
    }
  }
  for (double& v : s.std) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 0.0)) v = 1.0;
  }
  return s;
}

void Standardizer::apply(LabeledDataset& data) const {
  const std::size_t n = data.size();
  if (n == 0) return;
  const std::size_t dims = data.features.size() / n;
  if (dims != mean.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "standardizer fitted on " + std::to_string(mean.size()) +
                    " features, data has " + std::to_string(dims));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dims; ++j) {
      double& v = data.features[i * dims + j];
      v = (v - mean[j]) / std[j];
    }
  }
}

}  // namespace pwlu::data
