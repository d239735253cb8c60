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

#include "cemmaf/bundle.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <memory>
#include <nlohmann/json.hpp>
#include <set>

#include "cemmaf/error.hpp"
#include "cemmaf/weights.hpp"

namespace cemmaf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kBundleFormat = "cemmaf-bundle";
constexpr int kBundleVersion = 1;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

json component_entry(const Network& net, const std::string& file) {
  json acts = json::array();
  for (Activation a : net.activations()) acts.push_back(std::string(activation_name(a)));
  return {{"weights", file}, {"activations", acts}};
}

Network load_component(const fs::path& dir, const json& manifest, const std::string& key) {
  if (!manifest.contains(key)) throw FormatError("missing component: " + key);
  const json& entry = manifest.at(key);
  const std::string file = entry.at("weights").get<std::string>();
  const fs::path path = dir / file;
  if (!fs::exists(path)) throw FormatError("missing component: " + key + " (" + file + ")");
  std::vector<Activation> acts;
  for (const auto& a : entry.at("activations")) acts.push_back(parse_activation(a.get<std::string>()));
  try {
    return Network::from_tensors(read_weight_file(path), acts);
  } catch (const ShapeError& e) {
    throw ShapeError(key + ": " + e.what());
  }
}

Network load_attribute_network(const fs::path& dir, const json& entry, const std::string& name) {
  const std::string file = entry.at("weights").get<std::string>();
  const fs::path path = dir / file;
  if (!fs::exists(path)) throw FormatError("missing component: attribute '" + name + "' (" + file + ")");
  std::vector<Activation> acts;
  for (const auto& a : entry.at("activations")) acts.push_back(parse_activation(a.get<std::string>()));
  return Network::from_tensors(read_weight_file(path), acts);
}

void check_network(const Network& net, std::size_t in, std::size_t out, const std::string& what) {
  if (net.empty()) throw ShapeError(what + " is empty");
  if (net.input_dim() != in || net.output_dim() != out) {
    throw ShapeError(what + " maps " + std::to_string(net.input_dim()) + " -> " +
                     std::to_string(net.output_dim()) + ", expected " + std::to_string(in) +
                     " -> " + std::to_string(out));
  }
}

}  // namespace

double default_attribute_threshold(const Network& network) {
  if (!network.empty() && network.layers().back().activation == Activation::kSigmoid) return 0.5;
  return 0.0;
}

void ModelBundle::validate() const {
  if (image_shape.size() == 0) throw ShapeError("bundle image shape must be positive");
  if (latent_dim == 0) throw ShapeError("bundle latent dimension must be positive");
  if (class_names.size() < 2) throw ConfigError("classifier needs at least two classes");
  if (attributes.empty()) throw ConfigError("bundle needs at least one attribute function");
  const std::size_t n = image_shape.size();
  check_network(classifier, n, class_names.size(), "classifier");
  check_network(decoder, latent_dim, n, "decoder");
  if (encoder) check_network(*encoder, n, latent_dim, "encoder");
  std::set<std::string> names;
  for (const Attribute& a : attributes) {
    check_network(a.network, n, 1, "attribute '" + a.name + "'");
    if (a.name.empty()) throw ConfigError("attribute names must be non-empty");
    if (!names.insert(a.name).second) throw ConfigError("duplicate attribute name '" + a.name + "'");
    if (a.direction != 1.0 && a.direction != -1.0) {
      throw ConfigError("attribute '" + a.name + "' direction must be +1 or -1");
    }
  }
}

ModelBundle load_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  if (!fs::exists(manifest_path)) throw FormatError("missing component: manifest (" + manifest_path.string() + ")");
  json manifest;
  try {
    manifest = json::parse(read_text(manifest_path));
  } catch (const json::parse_error& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }

  ModelBundle bundle;
  try {
    if (manifest.value("format", std::string{}) != kBundleFormat) {
      throw FormatError(manifest_path.string() + ": not a cemmaf bundle manifest");
    }
    if (manifest.value("version", 0) != kBundleVersion) {
      throw FormatError(manifest_path.string() + ": unsupported bundle version");
    }
    const json& shape = manifest.at("image_shape");
    bundle.image_shape = {shape.at("height").get<std::size_t>(), shape.at("width").get<std::size_t>(),
                          shape.at("channels").get<std::size_t>()};
    bundle.latent_dim = manifest.at("latent_dim").get<std::size_t>();
    bundle.class_names = manifest.at("class_names").get<std::vector<std::string>>();
    bundle.classifier = load_component(dir, manifest, "classifier");
    bundle.decoder = load_component(dir, manifest, "decoder");
    if (manifest.contains("encoder")) bundle.encoder = load_component(dir, manifest, "encoder");
    if (!manifest.contains("attributes")) throw FormatError("missing component: attributes");
    for (const json& entry : manifest.at("attributes")) {
      Attribute attr;
      attr.name = entry.at("name").get<std::string>();
      attr.network = load_attribute_network(dir, entry, attr.name);
      attr.threshold = entry.contains("threshold") ? entry.at("threshold").get<double>()
                                                   : default_attribute_threshold(attr.network);
      attr.direction = entry.value("direction", 1.0);
      bundle.attributes.push_back(std::move(attr));
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  bundle.validate();
  return bundle;
}

void save_bundle(const ModelBundle& bundle, const fs::path& dir) {
  bundle.validate();
  fs::create_directories(dir);

  json manifest;
  manifest["format"] = kBundleFormat;
  manifest["version"] = kBundleVersion;
  manifest["image_shape"] = {{"height", bundle.image_shape.height},
                             {"width", bundle.image_shape.width},
                             {"channels", bundle.image_shape.channels}};
  manifest["latent_dim"] = bundle.latent_dim;
  manifest["class_names"] = bundle.class_names;

  auto save = [&](const Network& net, const std::string& file) {
    write_weight_file(dir / file, net.tensors());
    return component_entry(net, file);
  };
  manifest["classifier"] = save(bundle.classifier, "classifier.cmaf");
  manifest["decoder"] = save(bundle.decoder, "decoder.cmaf");
  if (bundle.encoder) manifest["encoder"] = save(*bundle.encoder, "encoder.cmaf");
  json attrs = json::array();
  for (std::size_t i = 0; i < bundle.attributes.size(); ++i) {
    const Attribute& a = bundle.attributes[i];
    json entry = save(a.network, "attribute_" + std::to_string(i) + ".cmaf");
    entry["name"] = a.name;
    entry["threshold"] = a.threshold;
    entry["direction"] = a.direction;
    attrs.push_back(std::move(entry));
  }
  manifest["attributes"] = attrs;
  write_text(dir / kManifestName, manifest.dump(2) + "\n");
}

std::string bundle_digest(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 unavailable");
  }
  for (const fs::path& file : files) {
    const std::string name = file.filename().string();
    const std::string bytes = read_text(file);
    EVP_DigestUpdate(ctx.get(), name.data(), name.size() + 1);  // include the NUL separator
    EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &length);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw ShapeError("argmax of empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::size_t argmax_excluding(std::span<const double> scores, std::size_t excluded) {
  if (scores.size() < 2) throw ShapeError("need at least two scores");
  std::size_t best = excluded == 0 ? 1 : 0;
  for (std::size_t i = best + 1; i < scores.size(); ++i) {
    if (i != excluded && scores[i] > scores[best]) best = i;
  }
  return best;
}

namespace {

void check_image(const ModelBundle& bundle, const Image& image) {
  if (image.shape() != bundle.image_shape) {
    throw ShapeError("image is " + image.shape().to_string() + ", bundle expects " +
                     bundle.image_shape.to_string());
  }
}

}  // namespace

std::vector<double> classify(const ModelBundle& bundle, const Image& image) {
  check_image(bundle, image);
  return bundle.classifier.forward(image.values());
}

std::size_t predict(const ModelBundle& bundle, const Image& image) {
  return argmax(classify(bundle, image));
}

std::vector<bool> clamp_unit_interval(std::span<double> values) {
  std::vector<bool> inside(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    inside[i] = values[i] >= 0.0 && values[i] <= 1.0;
    values[i] = std::clamp(values[i], 0.0, 1.0);
  }
  return inside;
}

Image decode(const ModelBundle& bundle, const LatentCode& z) {
  if (z.size() != bundle.latent_dim) {
    throw ShapeError("latent code has " + std::to_string(z.size()) + " entries, decoder expects " +
                     std::to_string(bundle.latent_dim));
  }
  std::vector<double> pixels = bundle.decoder.forward(z.values);
  clamp_unit_interval(pixels);
  return Image(bundle.image_shape, std::move(pixels));
}

std::vector<double> eval_attributes(const ModelBundle& bundle, const Image& image) {
  check_image(bundle, image);
  std::vector<double> out;
  out.reserve(bundle.attributes.size());
  for (const Attribute& a : bundle.attributes) {
    out.push_back(a.direction * a.network.forward(image.values())[0]);
  }
  return out;
}

LatentCode encode(const ModelBundle& bundle, const Image& image) {
  check_image(bundle, image);
  if (bundle.encoder) return LatentCode{bundle.encoder->forward(image.values())};
  return invert_decoder(bundle, image);
}

LatentCode invert_decoder(const ModelBundle& bundle, const Image& image, int steps, double step) {
  check_image(bundle, image);
  LatentCode z{std::vector<double>(bundle.latent_dim, 0.0)};
  const auto target = image.values();
  std::vector<double> cotangent(target.size());
  for (int t = 0; t < steps; ++t) {
    Network::Pass pass = bundle.decoder.forward_pass(z.values);
    std::vector<double> out(pass.output().begin(), pass.output().end());
    const std::vector<bool> inside = clamp_unit_interval(out);
    for (std::size_t i = 0; i < out.size(); ++i) {
      cotangent[i] = inside[i] ? 2.0 * (out[i] - target[i]) : 0.0;
    }
    const std::vector<double> grad = bundle.decoder.pullback(pass, cotangent);
    for (std::size_t j = 0; j < z.values.size(); ++j) z.values[j] -= step * grad[j];
  }
  return z;
}

}  // namespace cemmaf
