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

// Model bundle: classifier, decoder, optional encoder, and monotonic
// attribute functions, plus the on-disk directory format.
//
// A bundle directory holds `manifest.json` and one CMAF weight file per
// component. Manifest fields:
//
//   format        "cemmaf-bundle"
//   version       1
//   image_shape   {"height", "width", "channels"}
//   latent_dim    decoder input size
//   class_names   one name per classifier output
//   classifier, decoder, encoder (optional):
//                 {"weights": file, "activations": ["relu", ..., "none"]}
//   attributes    [{"name", "weights", "activations", "threshold",
//                   "direction"}]
//
// Attribute `direction` is +1 or -1 (a negative identity map flips which way
// counts as adding the concept). A missing `threshold` defaults to 0.5 when
// the attribute ends in a sigmoid and 0.0 otherwise.

#ifndef CEMMAF_BUNDLE_HPP_
#define CEMMAF_BUNDLE_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cemmaf/image.hpp"
#include "cemmaf/network.hpp"

namespace cemmaf {

inline constexpr const char* kManifestName = "manifest.json";

struct Attribute {
  std::string name;
  Network network;  // image -> one score
  double threshold = 0.0;
  double direction = 1.0;
};

double default_attribute_threshold(const Network& network);

struct ModelBundle {
  ImageShape image_shape;
  std::size_t latent_dim = 0;
  std::vector<std::string> class_names;
  Network classifier;  // raw logits
  Network decoder;     // output clamped to [0, 1]
  std::optional<Network> encoder;
  std::vector<Attribute> attributes;

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t num_attributes() const { return attributes.size(); }

  // Throws ShapeError / ConfigError if components disagree with the declared
  // shapes, fewer than two classes, no attributes, or duplicate names.
  void validate() const;
};

ModelBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);

// SHA-256 (hex) over every regular file in the bundle directory, visited in
// name order.
std::string bundle_digest(const std::filesystem::path& dir);

// Index of the largest score; the lowest index wins ties.
std::size_t argmax(std::span<const double> scores);
// max over i != excluded; the lowest index wins ties.
std::size_t argmax_excluding(std::span<const double> scores, std::size_t excluded);

std::vector<double> classify(const ModelBundle& bundle, const Image& image);
std::size_t predict(const ModelBundle& bundle, const Image& image);

Image decode(const ModelBundle& bundle, const LatentCode& z);

// Entry i is direction_i * network_i(image).
std::vector<double> eval_attributes(const ModelBundle& bundle, const Image& image);

// z for an image: the encoder when present, otherwise decoder inversion.
LatentCode encode(const ModelBundle& bundle, const Image& image);

inline constexpr int kInversionSteps = 500;
inline constexpr double kInversionStep = 0.05;

// Gradient descent on ||x - D(z)||^2 starting from z = 0.
LatentCode invert_decoder(const ModelBundle& bundle, const Image& image,
                          int steps = kInversionSteps, double step = kInversionStep);

// Clamps decoder output into [0, 1] in place; returns the mask of entries
// that were inside the interval (where the clamp passes gradients).
std::vector<bool> clamp_unit_interval(std::span<double> values);

}  // namespace cemmaf

#endif  // CEMMAF_BUNDLE_HPP_
