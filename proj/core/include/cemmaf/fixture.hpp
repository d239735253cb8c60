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

// Desk-scale fixture models.
//
// Images are synthetic class-conditional Gaussian blobs: each class has a
// center on a circle around the image middle, and every sample jitters the
// center, width, and amplitude and adds a little noise. The classifier is a
// one-hidden-layer ReLU network trained by full-batch gradient descent on
// softmax cross-entropy; the encoder/decoder pair is a small autoencoder
// (sigmoid output) trained with Adam on squared error. Attributes are analytic
// linear functions: mean brightness and the mean mass of the left, right,
// top, and bottom halves.
//
// Everything is driven by one std::mt19937_64 seed, so the same spec and seed
// give byte-identical files.

#ifndef CEMMAF_FIXTURE_HPP_
#define CEMMAF_FIXTURE_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cemmaf/bundle.hpp"
#include "cemmaf/image.hpp"
#include "cemmaf/key_value.hpp"

namespace cemmaf {

struct FixtureSpec {
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t channels = 1;
  std::size_t classes = 3;
  std::size_t latent_dim = 4;
  std::size_t samples_per_class = 60;
  std::size_t hidden = 16;
  std::size_t classifier_epochs = 600;
  double classifier_learning_rate = 0.5;
  std::size_t autoencoder_epochs = 1500;
  double autoencoder_learning_rate = 0.01;
  std::size_t images = 10;
  double jitter = 0.6;
  double noise = 0.02;

  // Throws ConfigError for unsatisfiable specs (fewer than two classes, zero
  // sizes, channel counts other than 1 or 3, non-positive rates).
  void validate() const;
};

FixtureSpec parse_fixture_spec(const KeyValues& pairs);
FixtureSpec read_fixture_spec(const std::filesystem::path& path);
std::string format_fixture_spec(const FixtureSpec& spec);

struct LabeledImage {
  Image image;
  std::size_t label = 0;
};

// `per_class` samples of every class, interleaved by class.
std::vector<LabeledImage> generate_blobs(const FixtureSpec& spec, std::size_t per_class,
                                         std::mt19937_64& rng);

struct FixtureModel {
  ModelBundle bundle;       // weights already rounded through float32
  double train_accuracy = 0.0;
};

// Trains the bundle in memory.
FixtureModel train_fixture_model(const FixtureSpec& spec, std::uint64_t seed);

// Trains and writes a bundle directory. Returns the training accuracy
// measured with the saved (float32) weights.
double train_fixture(const FixtureSpec& spec, std::uint64_t seed,
                     const std::filesystem::path& bundle_dir);

inline constexpr const char* kFixtureManifestName = "fixtures.json";

// Writes <out>/bundle, <out>/images/img_NNN.pgm and <out>/fixtures.json. The
// manifest records, per image, the generating label, the predicted class and
// the attribute values, all measured on the reloaded 8-bit image with the
// reloaded bundle.
void write_fixture_set(const FixtureSpec& spec, std::uint64_t seed,
                       const std::filesystem::path& out_dir);

}  // namespace cemmaf

#endif  // CEMMAF_FIXTURE_HPP_
