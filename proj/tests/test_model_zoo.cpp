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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <random>

#include "cemmaf/bundle.hpp"
#include "cemmaf/error.hpp"
#include "cemmaf/fixture.hpp"
#include "cemmaf/key_value.hpp"
#include "cemmaf/netpbm.hpp"
#include "cemmaf/weights.hpp"
#include "toys.hpp"

namespace cemmaf {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

nlohmann::json fixture_manifest() {
  std::ifstream in(testing::fixture_dir() / kFixtureManifestName);
  return nlohmann::json::parse(in);
}

TEST(Weights, RoundTripWidensFloat32) {
  const std::vector<Tensor> tensors = {Tensor::matrix(2, 2, {0.1, -2.5, 3.0, 1e-3}), Tensor::vector({7.0})};
  const std::vector<Tensor> back = decode_weights(encode_weights(tensors));
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < tensors.size(); ++i) EXPECT_EQ(back[i], quantize_float32(tensors[i]));
  const std::string bytes = encode_weights(tensors);
  EXPECT_EQ(bytes.substr(0, 4), "CMAF");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian
  EXPECT_EQ(bytes.size(), 4u + 4 + 4 + (4 + 8 + 16) + (4 + 4 + 4));
}

TEST(Weights, RejectsCorruptFiles) {
  const std::string good = encode_weights(std::vector<Tensor>{Tensor::vector({1.0, 2.0})});
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_weights(bad_magic), FormatError);
  std::string bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(decode_weights(bad_version), FormatError);
  EXPECT_THROW(decode_weights(good.substr(0, good.size() - 1)), FormatError);
  EXPECT_THROW(decode_weights(good + "x"), FormatError);
  EXPECT_THROW(decode_weights("CM"), FormatError);
}

TEST(Bundle, LoadsFixture) {
  const ModelBundle b = load_bundle(testing::fixture_dir() / "bundle");
  EXPECT_EQ(b.num_classes(), 3u);
  EXPECT_EQ(b.latent_dim, 4u);
  EXPECT_EQ(b.image_shape, (ImageShape{8, 8, 1}));
  EXPECT_TRUE(b.encoder.has_value());
  EXPECT_EQ(b.num_attributes(), 5u);
}

TEST(Bundle, MissingDecoderIsReported) {
  TempDir dir;
  fs::copy(testing::fixture_dir() / "bundle", dir.path(), fs::copy_options::recursive);
  fs::remove(dir / "decoder.cmaf");
  try {
    load_bundle(dir.path());
    FAIL() << "expected an error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("missing component"), std::string::npos) << e.what();
  }
}

TEST(Bundle, WrongMagicIsFormatError) {
  TempDir dir;
  fs::copy(testing::fixture_dir() / "bundle", dir.path(), fs::copy_options::recursive);
  std::string bytes = slurp(dir / "classifier.cmaf");
  bytes[1] = 'Z';
  spit(dir / "classifier.cmaf", bytes);
  EXPECT_THROW(load_bundle(dir.path()), FormatError);
}

TEST(Bundle, ShapeInconsistencyIsRejected) {
  ModelBundle b = testing::constant_classifier_toy();
  b.image_shape = {3, 3, 1};
  EXPECT_THROW(b.validate(), ShapeError);
}

TEST(Classify, ZeroWeightsTieGoesToClassZero) {
  const ModelBundle b = testing::make_bundle({1, 2, 1}, testing::linear(2, 3, std::vector<double>(6, 0.0), {0, 0, 0}),
                                             testing::identity(2), {testing::mean_attribute("m", 2)});
  const Image x({1, 2, 1}, {0.3, 0.8});
  EXPECT_EQ(classify(b, x), (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_EQ(predict(b, x), 0u);
}

TEST(Classify, IdentityClassifier) {
  const ModelBundle b = testing::make_bundle({1, 2, 1}, testing::identity(2), testing::identity(2),
                                             {testing::mean_attribute("m", 2)});
  const Image x({1, 2, 1}, {0.9, 0.1});
  EXPECT_EQ(classify(b, x), (std::vector<double>{0.9, 0.1}));
  EXPECT_EQ(predict(b, x), 0u);
  EXPECT_THROW(classify(b, Image({2, 2, 1})), ShapeError);
}

TEST(Classify, FixtureImagesMatchManifest) {
  const ModelBundle b = load_bundle(testing::fixture_dir() / "bundle");
  const nlohmann::json m = fixture_manifest();
  for (const auto& im : m.at("images")) {
    const Image x = read_image(testing::fixture_dir() / im.at("file").get<std::string>());
    EXPECT_EQ(predict(b, x), im.at("predicted_class").get<std::size_t>());
    const std::vector<double> attrs = eval_attributes(b, x);
    for (std::size_t a = 0; a < b.num_attributes(); ++a) {
      EXPECT_EQ(attrs[a], im.at("attributes").at(b.attributes[a].name).get<double>());
    }
  }
}

TEST(Decode, IdentityAndSigmoidZero) {
  const ModelBundle id = testing::make_bundle({1, 3, 1}, testing::identity(3), testing::identity(3),
                                              {testing::mean_attribute("m", 3)});
  const Image x({1, 3, 1}, {0.25, 0.5, 1.0});
  EXPECT_EQ(decode(id, LatentCode{{0.25, 0.5, 1.0}}), x);
  EXPECT_EQ(decode(id, LatentCode{{-1.0, 0.5, 3.0}}), Image({1, 3, 1}, {0.0, 0.5, 1.0}));
  EXPECT_THROW(decode(id, LatentCode{{1.0}}), ShapeError);

  const ModelBundle sig = testing::make_bundle(
      {1, 3, 1}, testing::identity(3),
      testing::linear(2, 3, std::vector<double>(6, 0.0), {0, 0, 0}, Activation::kSigmoid),
      {testing::mean_attribute("m", 3)});
  EXPECT_EQ(decode(sig, LatentCode{{0.7, -0.2}}), Image({1, 3, 1}, {0.5, 0.5, 0.5}));
}

TEST(Decode, FixtureReconstructsInputs) {
  const ModelBundle b = load_bundle(testing::fixture_dir() / "bundle");
  for (const fs::path& p : testing::fixture_images()) {
    const Image x = read_image(p);
    const Image r = decode(b, encode(b, x));
    double mae = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mae += std::abs(r.values()[i] - x.values()[i]);
    EXPECT_LT(mae / static_cast<double>(x.size()), 0.1) << p;
  }
}

TEST(Decode, StaysInUnitIntervalForRandomLatents) {
  const ModelBundle b = load_bundle(testing::fixture_dir() / "bundle");
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    LatentCode z{std::vector<double>(b.latent_dim)};
    for (double& v : z.values) v = n(rng);
    const Image decoded = decode(b, z);
    for (double v : decoded.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Encode, InversionWithoutEncoderReducesError) {
  ModelBundle b = load_bundle(testing::fixture_dir() / "bundle");
  b.encoder.reset();
  const Image x = read_image(testing::fixture_images().front());
  const double before = squared_distance(decode(b, LatentCode{std::vector<double>(b.latent_dim, 0.0)}).values(), x.values());
  const double after = squared_distance(decode(b, encode(b, x)).values(), x.values());
  EXPECT_LT(after, 0.5 * before);
}

TEST(Attributes, IdentityAndNegativeIdentity) {
  const ModelBundle b = testing::make_bundle({2, 2, 1}, testing::identity(4), testing::identity(4),
                                             {testing::mean_attribute("up", 4, 1.0),
                                              testing::mean_attribute("down", 4, -1.0)});
  const Image ones({2, 2, 1}, {1.0, 1.0, 1.0, 1.0});
  EXPECT_EQ(eval_attributes(b, ones), (std::vector<double>{1.0, -1.0}));
}

TEST(Attributes, DefaultThresholds) {
  EXPECT_EQ(default_attribute_threshold(testing::identity(2)), 0.0);
  EXPECT_EQ(default_attribute_threshold(testing::linear(2, 1, {1, 1}, {0}, Activation::kSigmoid)), 0.5);
}

TEST(Fixture, ClassifierFitsItsTrainingSet) {
  EXPECT_GE(fixture_manifest().at("train_accuracy").get<double>(), 0.95);
}

TEST(Fixture, TwoSeparableClassesReachFullAccuracy) {
  FixtureSpec spec;
  spec.classes = 2;
  spec.jitter = 0.0;
  spec.samples_per_class = 30;
  spec.autoencoder_epochs = 50;
  EXPECT_EQ(train_fixture_model(spec, 3).train_accuracy, 1.0);
}

TEST(Fixture, SameSeedGivesByteIdenticalBundles) {
  FixtureSpec spec;
  spec.samples_per_class = 20;
  spec.classifier_epochs = 100;
  spec.autoencoder_epochs = 100;
  TempDir a, b;
  train_fixture(spec, 21, a.path());
  train_fixture(spec, 21, b.path());
  EXPECT_EQ(bundle_digest(a.path()), bundle_digest(b.path()));
  for (const auto& entry : fs::directory_iterator(a.path())) {
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename().string())) << entry.path();
  }
}

TEST(Fixture, RejectsUnsatisfiableSpecs) {
  FixtureSpec spec;
  spec.classes = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
  EXPECT_THROW(train_fixture_model(spec, 1), ConfigError);
  spec.classes = 3;
  spec.channels = 2;
  EXPECT_THROW(spec.validate(), ConfigError);
  EXPECT_THROW(parse_fixture_spec(parse_key_values("colour = 3\n")), ConfigError);
  const FixtureSpec parsed = parse_fixture_spec(parse_key_values(format_fixture_spec(FixtureSpec{})));
  EXPECT_EQ(format_fixture_spec(parsed), format_fixture_spec(FixtureSpec{}));
}

TEST(Bundle, SaveLoadPreservesOutputs) {
  const FixtureModel model = train_fixture_model(FixtureSpec{.samples_per_class = 10, .classifier_epochs = 20,
                                                             .autoencoder_epochs = 20},
                                                 4);
  TempDir dir;
  save_bundle(model.bundle, dir.path());
  const ModelBundle loaded = load_bundle(dir.path());
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    Image x(model.bundle.image_shape);
    for (double& v : x.values()) v = u(rng);
    LatentCode z{std::vector<double>(model.bundle.latent_dim)};
    for (double& v : z.values) v = u(rng) * 2.0 - 1.0;
    EXPECT_EQ(classify(loaded, x), classify(model.bundle, x));
    EXPECT_EQ(eval_attributes(loaded, x), eval_attributes(model.bundle, x));
    EXPECT_EQ(decode(loaded, z), decode(model.bundle, z));
    EXPECT_EQ(encode(loaded, x), encode(model.bundle, x));
  }
}

TEST(Netpbm, BinaryAndAsciiRoundTrip) {
  TempDir dir;
  const Image gray({2, 3, 1}, {0.0, 1.0, 128.0 / 255, 3.0 / 255, 254.0 / 255, 0.5});
  write_image(dir / "g.pgm", gray);
  EXPECT_EQ(read_image(dir / "g.pgm"), quantize_8bit(gray));
  const Image color({1, 2, 3}, {0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  write_image(dir / "c.ppm", color);
  EXPECT_EQ(read_image(dir / "c.ppm"), quantize_8bit(color));

  spit(dir / "a.pgm", "P2\n# comment\n2 1\n# another\n255\n0 255\n");
  EXPECT_EQ(read_image(dir / "a.pgm"), Image({1, 2, 1}, {0.0, 1.0}));

  PnmData wide{2, 1, 1, 1000, {0, 1000}};
  write_pnm(dir / "w.pgm", wide);
  EXPECT_EQ(read_pnm(dir / "w.pgm").samples, wide.samples);

  spit(dir / "bad.pgm", "P5\n2 2\n255\n\x01");
  EXPECT_THROW(read_pnm(dir / "bad.pgm"), FormatError);
  EXPECT_THROW(read_pnm(dir / "missing.pgm"), FormatError);
}

TEST(KeyValue, ParsesAndRejects) {
  const KeyValues kv = parse_key_values("# c\n a = 1 \n\nb=x # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"a", "1"}));
  EXPECT_EQ(kv[1].second, "x");
  EXPECT_THROW(parse_key_values("a=1\na=2\n"), ConfigError);
  EXPECT_THROW(parse_key_values("novalue\n"), ConfigError);
  EXPECT_THROW(parse_real("kappa", "abc"), ConfigError);
  EXPECT_THROW(parse_count("rounds", "-1"), ConfigError);
  EXPECT_EQ(parse_real("x", format_real(0.1)), 0.1);
}

}  // namespace
}  // namespace cemmaf
