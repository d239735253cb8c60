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

#include "cemmaf/image.hpp"

#include <algorithm>
#include <cmath>

#include "cemmaf/error.hpp"

namespace cemmaf {

std::string ImageShape::to_string() const {
  return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
}

Image::Image(ImageShape shape) : shape_(shape), values_(shape.size(), 0.0) {
  if (shape.size() == 0) throw ShapeError("image dimensions must be positive");
}

Image::Image(ImageShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (shape.size() == 0) throw ShapeError("image dimensions must be positive");
  if (values_.size() != shape.size()) {
    throw ShapeError("image " + shape.to_string() + " needs " + std::to_string(shape.size()) +
                     " values, got " + std::to_string(values_.size()));
  }
}

Tensor Image::to_tensor() const { return Tensor::vector(values_); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("distance between vectors of different length");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

Image quantize_8bit(const Image& image) {
  Image out = image;
  for (double& v : out.values()) {
    v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  }
  return out;
}

}  // namespace cemmaf
