#include "pwlu/data/idx.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <vector>

#include "pwlu/error.hpp"

namespace pwlu::data {

namespace {

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

class BigEndianCursor {
 public:
  BigEndianCursor(std::span<const std::uint8_t> bytes, const std::string& name)
      : bytes_(bytes), name_(name) {}

  std::uint32_t u32(const char* field) {
    if (bytes_.size() - pos_ < 4 || pos_ > bytes_.size()) {
      throw Error(ErrorCode::kTruncated,
                  name_ + ": truncated header reading " + field);
    }
    const std::uint32_t v = (std::uint32_t{bytes_[pos_]} << 24) |
                            (std::uint32_t{bytes_[pos_ + 1]} << 16) |
                            (std::uint32_t{bytes_[pos_ + 2]} << 8) |
                            std::uint32_t{bytes_[pos_ + 3]};
    pos_ += 4;
    return v;
  }

  std::span<const std::uint8_t> payload(std::uint64_t count) {
    if (bytes_.size() - pos_ < count) {
      throw Error(ErrorCode::kTruncated,
                  name_ + ": payload has " +
                      std::to_string(bytes_.size() - pos_) +
                      " bytes, header promises " + std::to_string(count));
    }
    return bytes_.subspan(pos_, count);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  const std::string& name_;
};

void expect_magic(std::uint32_t got, std::uint32_t want,
                  const std::string& name) {
  if (got != want) {
    throw Error(ErrorCode::kBadMagic, name + ": bad magic " + hex32(got) +
                                          ", expected " + hex32(want));
  }
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

LabeledDataset parse_idx(std::span<const std::uint8_t> images,
                         std::span<const std::uint8_t> labels,
                         const std::string& images_name,
                         const std::string& labels_name) {
  BigEndianCursor img(images, images_name);
  expect_magic(img.u32("magic"), kIdxImageMagic, images_name);
  const std::uint64_t n_images = img.u32("image count");
  const std::uint64_t rows = img.u32("row count");
  const std::uint64_t cols = img.u32("column count");
  std::uint64_t n_pixels = 0;
  if (__builtin_mul_overflow(n_images, rows, &n_pixels) ||
      __builtin_mul_overflow(n_pixels, cols, &n_pixels)) {
    throw Error(ErrorCode::kTruncated,
                images_name + ": header dimensions overflow");
  }
  const auto pixels = img.payload(n_pixels);

  BigEndianCursor lab(labels, labels_name);
  expect_magic(lab.u32("magic"), kIdxLabelMagic, labels_name);
  const std::uint64_t n_labels = lab.u32("label count");
  const auto label_bytes = lab.payload(n_labels);

  if (n_images != n_labels) {
    throw Error(ErrorCode::kCountMismatch,
                images_name + " holds " + std::to_string(n_images) +
                    " images but " + labels_name + " holds " +
                    std::to_string(n_labels) + " labels");
  }

  LabeledDataset data;
  data.features = Tensor({n_images, 1, rows, cols});
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    data.features[i] = pixels[i] / 255.0;
  }
  data.labels.assign(label_bytes.begin(), label_bytes.end());
  const int max_label =
      data.labels.empty()
          ? 0
          : *std::max_element(data.labels.begin(), data.labels.end());
  data.num_classes = max_label + 1;
  return data;
}

LabeledDataset load_idx(const std::string& images_path,
                        const std::string& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);
  return parse_idx(images, labels, images_path, labels_path);
}

IdxSplits load_idx_dir(const std::string& dir) {
  IdxSplits s;
  s.train = load_idx(dir + "/train-images-idx3-ubyte",
                     dir + "/train-labels-idx1-ubyte");
  s.train.split = "train";
  s.test = load_idx(dir + "/t10k-images-idx3-ubyte",
                    dir + "/t10k-labels-idx1-ubyte");
  s.test.split = "test";
  const int classes = std::max(s.train.num_classes, s.test.num_classes);
  s.train.num_classes = s.test.num_classes = classes;
  return s;
}

}  // namespace pwlu::data
