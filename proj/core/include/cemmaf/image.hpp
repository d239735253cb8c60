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

#ifndef CEMMAF_IMAGE_HPP_
#define CEMMAF_IMAGE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cemmaf/tensor.hpp"

namespace cemmaf {

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t pixels() const { return height * width; }
  std::size_t size() const { return height * width * channels; }
  std::string to_string() const;

  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

// H x W x C intensities in [0, 1], stored row-major with channels innermost.
class Image {
 public:
  Image() = default;
  // Black image.
  explicit Image(ImageShape shape);
  // Throws ShapeError on size mismatch. Values are not clamped.
  Image(ImageShape shape, std::vector<double> values);

  const ImageShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double at(std::size_t row, std::size_t col, std::size_t channel) const {
    return values_[(row * shape_.width + col) * shape_.channels + channel];
  }
  double& at(std::size_t row, std::size_t col, std::size_t channel) {
    return values_[(row * shape_.width + col) * shape_.channels + channel];
  }

  // Flat rank-1 tensor view used as graph input.
  Tensor to_tensor() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  ImageShape shape_;
  std::vector<double> values_;
};

// Latent code z consumed by a decoder.
struct LatentCode {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

// Rounds every value to the nearest multiple of 1/255 after clamping to
// [0, 1]; matches what an 8-bit image dump reloads as.
Image quantize_8bit(const Image& image);

}  // namespace cemmaf

#endif  // CEMMAF_IMAGE_HPP_
