#pragma once

// IDX files (the MNIST container format). All header fields are big-endian:
//
//   images: u32 magic 0x00000803, u32 count, u32 rows, u32 cols, then
//           count*rows*cols unsigned bytes
//   labels: u32 magic 0x00000801, u32 count, then count unsigned bytes
//
// Pixels are scaled to [0, 1]; features come out as [count, 1, rows, cols].

#include <cstdint>
#include <span>
#include <string>

#include "pwlu/data/dataset.hpp"

namespace pwlu::data {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// In-memory variant of load_idx; the names are used in error messages.
LabeledDataset parse_idx(std::span<const std::uint8_t> images,
                         std::span<const std::uint8_t> labels,
                         const std::string& images_name = "images",
                         const std::string& labels_name = "labels");

LabeledDataset load_idx(const std::string& images_path,
                        const std::string& labels_path);

// Loads <dir>/train-images-idx3-ubyte + train-labels-idx1-ubyte and the
// t10k-* pair.
struct IdxSplits {
  LabeledDataset train;
  LabeledDataset test;
};
IdxSplits load_idx_dir(const std::string& dir);

}  // namespace pwlu::data
