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

#ifndef CEMMAF_SEGMENTATION_HPP_
#define CEMMAF_SEGMENTATION_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cemmaf/image.hpp"

namespace cemmaf {

// Label map assigning every pixel to one of `count` superpixels. Labels are
// shared by all channels of a pixel and every id in [0, count) is used.
class SuperpixelPartition {
 public:
  SuperpixelPartition() = default;
  // Throws ShapeError if a label is out of range, an id is unused, or the
  // map size is not height * width.
  SuperpixelPartition(std::size_t height, std::size_t width, std::vector<std::uint32_t> labels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t count() const { return count_; }
  std::span<const std::uint32_t> labels() const { return labels_; }
  std::uint32_t label(std::size_t row, std::size_t col) const { return labels_[row * width_ + col]; }
  // Pixels per superpixel.
  std::vector<std::size_t> sizes() const;

  friend bool operator==(const SuperpixelPartition&, const SuperpixelPartition&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint32_t> labels_;
};

// Per-superpixel mask values in [0, 1].
using MaskVector = std::vector<double>;

// Rectangular grid with rows = round(sqrt(target * H / W)) clamped to [1, H]
// and cols = ceil(target / rows) clamped to [1, W]; cell edges at
// floor(i * H / rows) and floor(j * W / cols). The actual count rows * cols
// may differ from the target. Throws ConfigError if target_count < 1.
SuperpixelPartition grid_segment(std::size_t height, std::size_t width, std::size_t target_count);

// pixel <- m * x0 + (1 - m) * background, per channel.
Image apply_mask(const Image& image, const SuperpixelPartition& partition,
                 std::span<const double> mask, double background);

// Binary mask with ones at the given superpixel ids.
MaskVector mask_from_selection(std::size_t count, std::span<const std::size_t> ids);

// PGM label maps; one gray level per superpixel id.
SuperpixelPartition read_label_map(const std::filesystem::path& path);
void write_label_map(const std::filesystem::path& path, const SuperpixelPartition& partition);

}  // namespace cemmaf

#endif  // CEMMAF_SEGMENTATION_HPP_
