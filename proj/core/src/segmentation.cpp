// Copyright 2026 The cemmaf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cemmaf/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "cemmaf/error.hpp"
#include "cemmaf/netpbm.hpp"

namespace cemmaf {

SuperpixelPartition::SuperpixelPartition(std::size_t height, std::size_t width,
                                         std::vector<std::uint32_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
  if (height_ == 0 || width_ == 0) throw ShapeError("partition dimensions must be positive");
  if (labels_.size() != height_ * width_) {
    throw ShapeError("label map has " + std::to_string(labels_.size()) + " entries for a " +
                     std::to_string(height_) + "x" + std::to_string(width_) + " image");
  }
  count_ = static_cast<std::size_t>(*std::max_element(labels_.begin(), labels_.end())) + 1;
  std::vector<bool> used(count_, false);
  for (std::uint32_t l : labels_) used[l] = true;
  for (std::size_t id = 0; id < count_; ++id) {
    if (!used[id]) throw ShapeError("superpixel id " + std::to_string(id) + " has no pixels");
  }
}

std::vector<std::size_t> SuperpixelPartition::sizes() const {
  std::vector<std::size_t> out(count_, 0);
  for (std::uint32_t l : labels_) ++out[l];
  return out;
}

SuperpixelPartition grid_segment(std::size_t height, std::size_t width, std::size_t target_count) {
  if (target_count < 1) throw ConfigError("superpixel count must be at least 1");
  if (height == 0 || width == 0) throw ShapeError("image dimensions must be positive");
  const double ideal_rows = std::sqrt(static_cast<double>(target_count) * static_cast<double>(height) /
                                      static_cast<double>(width));
  const std::size_t rows =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(ideal_rows)), 1, height);
  const std::size_t cols = std::clamp<std::size_t>((target_count + rows - 1) / rows, 1, width);

  std::vector<std::uint32_t> labels(height * width);
  for (std::size_t r = 0; r < height; ++r) {
    // Row r lies in cell i where floor(i*H/rows) <= r < floor((i+1)*H/rows).
    const std::size_t cell_row = ((r + 1) * rows - 1) / height;
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t cell_col = ((c + 1) * cols - 1) / width;
      labels[r * width + c] = static_cast<std::uint32_t>(cell_row * cols + cell_col);
    }
  }
  return SuperpixelPartition(height, width, std::move(labels));
}

Image apply_mask(const Image& image, const SuperpixelPartition& partition,
                 std::span<const double> mask, double background) {
  const ImageShape& s = image.shape();
  if (s.height != partition.height() || s.width != partition.width()) {
    throw ShapeError("partition is " + std::to_string(partition.height()) + "x" +
                     std::to_string(partition.width()) + " but image is " + s.to_string());
  }
  if (mask.size() != partition.count()) {
    throw ShapeError("mask has " + std::to_string(mask.size()) + " entries for " +
                     std::to_string(partition.count()) + " superpixels");
  }
  Image out(s);
  const auto labels = partition.labels();
  const auto src = image.values();
  auto dst = out.values();
  for (std::size_t p = 0; p < s.pixels(); ++p) {
    const double m = mask[labels[p]];
    for (std::size_t ch = 0; ch < s.channels; ++ch) {
      const std::size_t i = p * s.channels + ch;
      dst[i] = m * src[i] + (1.0 - m) * background;
    }
  }
  return out;
}

MaskVector mask_from_selection(std::size_t count, std::span<const std::size_t> ids) {
  MaskVector mask(count, 0.0);
  for (std::size_t id : ids) {
    if (id >= count) throw ShapeError("superpixel id " + std::to_string(id) + " out of range");
    mask[id] = 1.0;
  }
  return mask;
}

SuperpixelPartition read_label_map(const std::filesystem::path& path) {
  const PnmData data = read_pnm(path);
  if (data.channels != 1) throw FormatError(path.string() + ": label map must be a PGM file");
  return SuperpixelPartition(data.height, data.width, data.samples);
}

void write_label_map(const std::filesystem::path& path, const SuperpixelPartition& partition) {
  if (partition.count() > 65536) throw FormatError("too many superpixels for a PGM label map");
  PnmData data;
  data.width = partition.width();
  data.height = partition.height();
  data.channels = 1;
  data.maxval = static_cast<std::uint32_t>(std::max<std::size_t>(partition.count() - 1, 1));
  data.samples.assign(partition.labels().begin(), partition.labels().end());
  write_pnm(path, data);
}

}  // namespace cemmaf
