#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pwlu/tensor.hpp"

namespace pwlu::data {

struct LabeledDataset {
  Tensor features;  // [num_samples, ...feature dims]
  std::vector<int> labels;
  int num_classes = 0;
  std::string split;  // "train", "test", ...

  std::size_t size() const { return labels.size(); }
  std::vector<std::size_t> sample_shape() const;

  // Gathers rows in the given order into a [indices.size(), ...] batch.
  Tensor gather(std::span<const std::size_t> indices) const;
  std::vector<int> gather_labels(std::span<const std::size_t> indices) const;

  // Throws kCountMismatch / kShapeMismatch when features and labels disagree
  // or a label is outside [0, num_classes).
  void validate() const;
};

// Two interleaved noisy spirals in the plane, one per class.
LabeledDataset gen_spirals(std::size_t n_per_class, double noise,
                           std::uint64_t seed);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;

  // Per-feature mean and population std over the samples. Features with
  // zero spread get std 1.
  static Standardizer fit(const LabeledDataset& data);
  void apply(LabeledDataset& data) const;
};

}  // namespace pwlu::data
