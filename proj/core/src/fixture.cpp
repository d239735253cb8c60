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

#include "cemmaf/fixture.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>

#include "cemmaf/error.hpp"
#include "cemmaf/graph.hpp"
#include "cemmaf/netpbm.hpp"
#include "cemmaf/weights.hpp"

namespace cemmaf {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Spec parsing

void FixtureSpec::validate() const {
  if (classes < 2) throw ConfigError("fixture spec needs at least 2 classes");
  if (height == 0 || width == 0) throw ConfigError("fixture image size must be positive");
  if (channels != 1 && channels != 3) throw ConfigError("fixture channels must be 1 or 3");
  if (latent_dim == 0) throw ConfigError("fixture latent_dim must be positive");
  if (samples_per_class == 0) throw ConfigError("fixture samples_per_class must be positive");
  if (hidden == 0) throw ConfigError("fixture hidden width must be positive");
  if (images == 0) throw ConfigError("fixture images must be positive");
  if (!(classifier_learning_rate > 0.0) || !(autoencoder_learning_rate > 0.0)) {
    throw ConfigError("fixture learning rates must be positive");
  }
  if (jitter < 0.0 || noise < 0.0) throw ConfigError("fixture jitter and noise must be non-negative");
}

FixtureSpec parse_fixture_spec(const KeyValues& pairs) {
  FixtureSpec spec;
  for (const auto& [key, value] : pairs) {
    auto count = [&](std::size_t& field) { field = parse_count(key, value); };
    auto real = [&](double& field) { field = parse_real(key, value); };
    if (key == "height") count(spec.height);
    else if (key == "width") count(spec.width);
    else if (key == "channels") count(spec.channels);
    else if (key == "classes") count(spec.classes);
    else if (key == "latent_dim") count(spec.latent_dim);
    else if (key == "samples_per_class") count(spec.samples_per_class);
    else if (key == "hidden") count(spec.hidden);
    else if (key == "classifier_epochs") count(spec.classifier_epochs);
    else if (key == "classifier_learning_rate") real(spec.classifier_learning_rate);
    else if (key == "autoencoder_epochs") count(spec.autoencoder_epochs);
    else if (key == "autoencoder_learning_rate") real(spec.autoencoder_learning_rate);
    else if (key == "images") count(spec.images);
    else if (key == "jitter") real(spec.jitter);
    else if (key == "noise") real(spec.noise);
    else throw ConfigError("unknown fixture spec key '" + key + "'");
  }
  spec.validate();
  return spec;
}

FixtureSpec read_fixture_spec(const fs::path& path) {
  return parse_fixture_spec(read_key_value_file(path));
}

std::string format_fixture_spec(const FixtureSpec& s) {
  std::string out;
  auto line = [&](const char* key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  line("height", std::to_string(s.height));
  line("width", std::to_string(s.width));
  line("channels", std::to_string(s.channels));
  line("classes", std::to_string(s.classes));
  line("latent_dim", std::to_string(s.latent_dim));
  line("samples_per_class", std::to_string(s.samples_per_class));
  line("hidden", std::to_string(s.hidden));
  line("classifier_epochs", std::to_string(s.classifier_epochs));
  line("classifier_learning_rate", format_real(s.classifier_learning_rate));
  line("autoencoder_epochs", std::to_string(s.autoencoder_epochs));
  line("autoencoder_learning_rate", format_real(s.autoencoder_learning_rate));
  line("images", std::to_string(s.images));
  line("jitter", format_real(s.jitter));
  line("noise", format_real(s.noise));
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

Image make_blob(const FixtureSpec& spec, std::size_t label, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double cy0 = (static_cast<double>(spec.height) - 1.0) / 2.0;
  const double cx0 = (static_cast<double>(spec.width) - 1.0) / 2.0;
  const double radius = 0.28 * static_cast<double>(std::min(spec.height, spec.width));
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(label) /
                           static_cast<double>(spec.classes) + std::numbers::pi / 4.0;
  const double cy = cy0 + radius * std::sin(angle) + spec.jitter * (2.0 * unit(rng) - 1.0);
  const double cx = cx0 + radius * std::cos(angle) + spec.jitter * (2.0 * unit(rng) - 1.0);
  const double sigma = 0.9 + 0.4 * unit(rng);
  const double amplitude = 0.75 + 0.25 * unit(rng);

  Image image({spec.height, spec.width, spec.channels});
  for (std::size_t r = 0; r < spec.height; ++r) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      const double dy = static_cast<double>(r) - cy;
      const double dx = static_cast<double>(c) - cx;
      const double blob = amplitude * std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      for (std::size_t ch = 0; ch < spec.channels; ++ch) {
        // Colour fixtures tint each class differently.
        const double tint = spec.channels == 1
                                ? 1.0
                                : 0.55 + 0.45 * static_cast<double>((label + ch) % spec.channels) /
                                             static_cast<double>(spec.channels - 1);
        const double v = tint * blob + spec.noise * gauss(rng);
        image.at(r, c, ch) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return image;
}

}  // namespace

std::vector<LabeledImage> generate_blobs(const FixtureSpec& spec, std::size_t per_class,
                                         std::mt19937_64& rng) {
  std::vector<LabeledImage> out;
  out.reserve(per_class * spec.classes);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t k = 0; k < spec.classes; ++k) out.push_back({make_blob(spec, k, rng), k});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

Tensor glorot(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor t({out, in});
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// Columns of the returned [n, B] matrix are the images.
Tensor batch_matrix(const std::vector<LabeledImage>& data) {
  const std::size_t n = data.front().image.size();
  const std::size_t batch = data.size();
  Tensor x({n, batch});
  for (std::size_t j = 0; j < batch; ++j) {
    const auto v = data[j].image.values();
    for (std::size_t i = 0; i < n; ++i) x[i * batch + j] = v[i];
  }
  return x;
}

struct Adam {
  explicit Adam(const std::vector<Tensor>& params, double lr) : lr(lr) {
    for (const Tensor& p : params) {
      m.emplace_back(p.shape());
      v.emplace_back(p.shape());
    }
  }

  void step(std::vector<Tensor>& params, const std::vector<const Tensor*>& grads) {
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t p = 0; p < params.size(); ++p) {
      for (std::size_t i = 0; i < params[p].size(); ++i) {
        const double g = (*grads[p])[i];
        m[p][i] = kBeta1 * m[p][i] + (1.0 - kBeta1) * g;
        v[p][i] = kBeta2 * v[p][i] + (1.0 - kBeta2) * g * g;
        params[p][i] -= lr * (m[p][i] / c1) / (std::sqrt(v[p][i] / c2) + 1e-8);
      }
    }
  }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  double lr;
  long t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

Network train_classifier(const FixtureSpec& spec, const std::vector<LabeledImage>& data,
                         std::mt19937_64& rng) {
  const std::size_t n = data.front().image.size();
  const std::size_t batch = data.size();
  const std::size_t k = spec.classes;

  GraphBuilder b;
  const NodeId w1 = b.input({spec.hidden, n}, "w1");
  const NodeId b1 = b.input({spec.hidden}, "b1");
  const NodeId w2 = b.input({k, spec.hidden}, "w2");
  const NodeId b2 = b.input({k}, "b2");
  const NodeId x = b.input({n, batch}, "x");
  const NodeId h = b.relu(b.add(b.matmul(w1, x), b1));
  const NodeId logits = b.add(b.matmul(w2, h), b2);
  const Graph graph = b.build();

  std::vector<Tensor> params = {glorot(spec.hidden, n, rng), Tensor({spec.hidden}),
                                glorot(k, spec.hidden, rng), Tensor({k})};
  const std::vector<NodeId> ids = {w1, b1, w2, b2};
  const Tensor xs = batch_matrix(data);

  for (std::size_t epoch = 0; epoch < spec.classifier_epochs; ++epoch) {
    InputMap inputs{{x, xs}};
    for (std::size_t p = 0; p < params.size(); ++p) inputs.emplace(ids[p], params[p]);
    const NodeValues values = forward_eval(graph, inputs);
    const Tensor& out = values[logits.index];
    Tensor cot({k, batch});
    for (std::size_t j = 0; j < batch; ++j) {
      double mx = out[j];
      for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, out[c * batch + j]);
      double z = 0.0;
      for (std::size_t c = 0; c < k; ++c) z += std::exp(out[c * batch + j] - mx);
      for (std::size_t c = 0; c < k; ++c) {
        const double p = std::exp(out[c * batch + j] - mx) / z;
        cot[c * batch + j] = (p - (data[j].label == c ? 1.0 : 0.0)) / static_cast<double>(batch);
      }
    }
    const Gradients grads = vector_jacobian_product(graph, values, logits, cot);
    for (std::size_t p = 0; p < params.size(); ++p) {
      const Tensor& g = grads.at(ids[p]);
      for (std::size_t i = 0; i < params[p].size(); ++i) {
        params[p][i] -= spec.classifier_learning_rate * g[i];
      }
    }
  }
  return Network({{params[0], params[1], Activation::kRelu}, {params[2], params[3], Activation::kNone}});
}

struct Autoencoder {
  Network encoder;
  Network decoder;
};

Autoencoder train_autoencoder(const FixtureSpec& spec, const std::vector<LabeledImage>& data,
                              std::mt19937_64& rng) {
  const std::size_t n = data.front().image.size();
  const std::size_t batch = data.size();
  const std::size_t h = spec.hidden;
  const std::size_t d = spec.latent_dim;

  GraphBuilder b;
  const NodeId e1 = b.input({h, n}, "e1");
  const NodeId eb1 = b.input({h}, "eb1");
  const NodeId e2 = b.input({d, h}, "e2");
  const NodeId eb2 = b.input({d}, "eb2");
  const NodeId d1 = b.input({h, d}, "d1");
  const NodeId db1 = b.input({h}, "db1");
  const NodeId d2 = b.input({n, h}, "d2");
  const NodeId db2 = b.input({n}, "db2");
  const NodeId x = b.input({n, batch}, "x");
  const NodeId hidden_e = b.relu(b.add(b.matmul(e1, x), eb1));
  const NodeId z = b.add(b.matmul(e2, hidden_e), eb2);
  const NodeId hidden_d = b.relu(b.add(b.matmul(d1, z), db1));
  const NodeId recon = b.sigmoid(b.add(b.matmul(d2, hidden_d), db2));
  const Graph graph = b.build();

  std::vector<Tensor> params = {glorot(h, n, rng), Tensor({h}), glorot(d, h, rng), Tensor({d}),
                                glorot(h, d, rng), Tensor({h}), glorot(n, h, rng), Tensor({n})};
  const std::vector<NodeId> ids = {e1, eb1, e2, eb2, d1, db1, d2, db2};
  const Tensor xs = batch_matrix(data);
  Adam adam(params, spec.autoencoder_learning_rate);
  const double norm = 2.0 / static_cast<double>(n * batch);

  for (std::size_t epoch = 0; epoch < spec.autoencoder_epochs; ++epoch) {
    InputMap inputs{{x, xs}};
    for (std::size_t p = 0; p < params.size(); ++p) inputs.emplace(ids[p], params[p]);
    const NodeValues values = forward_eval(graph, inputs);
    const Tensor& out = values[recon.index];
    Tensor cot(out.shape());
    for (std::size_t i = 0; i < out.size(); ++i) cot[i] = norm * (out[i] - xs[i]);
    const Gradients grads = vector_jacobian_product(graph, values, recon, cot);
    std::vector<const Tensor*> g;
    for (NodeId id : ids) g.push_back(&grads.at(id));
    adam.step(params, g);
  }
  return {Network({{params[0], params[1], Activation::kRelu}, {params[2], params[3], Activation::kNone}}),
          Network({{params[4], params[5], Activation::kRelu}, {params[6], params[7], Activation::kSigmoid}})};
}

Attribute linear_attribute(const std::string& name, const FixtureSpec& spec,
                           bool (*include)(std::size_t row, std::size_t col, const FixtureSpec&)) {
  const std::size_t n = spec.height * spec.width * spec.channels;
  Tensor w({1, n});
  std::size_t selected = 0;
  for (std::size_t r = 0; r < spec.height; ++r) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      if (include(r, c, spec)) selected += spec.channels;
    }
  }
  for (std::size_t r = 0; r < spec.height; ++r) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      if (!include(r, c, spec)) continue;
      for (std::size_t ch = 0; ch < spec.channels; ++ch) {
        w[(r * spec.width + c) * spec.channels + ch] = 1.0 / static_cast<double>(selected);
      }
    }
  }
  Network net({{w, Tensor({1}), Activation::kNone}});
  return {name, net, default_attribute_threshold(net), 1.0};
}

Network round_through_float32(const Network& net) {
  std::vector<Tensor> tensors = net.tensors();
  for (Tensor& t : tensors) t = quantize_float32(t);
  return Network::from_tensors(tensors, net.activations());
}

double accuracy(const ModelBundle& bundle, const std::vector<LabeledImage>& data) {
  std::size_t correct = 0;
  for (const LabeledImage& s : data) correct += predict(bundle, s.image) == s.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

FixtureModel train_fixture_model(const FixtureSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  const std::vector<LabeledImage> data = generate_blobs(spec, spec.samples_per_class, rng);

  ModelBundle bundle;
  bundle.image_shape = {spec.height, spec.width, spec.channels};
  bundle.latent_dim = spec.latent_dim;
  for (std::size_t k = 0; k < spec.classes; ++k) bundle.class_names.push_back("class_" + std::to_string(k));

  bundle.classifier = round_through_float32(train_classifier(spec, data, rng));
  Autoencoder ae = train_autoencoder(spec, data, rng);
  bundle.encoder = round_through_float32(ae.encoder);
  bundle.decoder = round_through_float32(ae.decoder);

  // Odd sizes put the middle row/column in both halves.
  bundle.attributes.push_back(linear_attribute(
      "brightness", spec, [](std::size_t, std::size_t, const FixtureSpec&) { return true; }));
  bundle.attributes.push_back(linear_attribute(
      "left_mass", spec,
      [](std::size_t, std::size_t c, const FixtureSpec& s) { return 2 * c + 1 <= s.width; }));
  bundle.attributes.push_back(linear_attribute(
      "right_mass", spec,
      [](std::size_t, std::size_t c, const FixtureSpec& s) { return 2 * c + 1 >= s.width; }));
  bundle.attributes.push_back(linear_attribute(
      "top_mass", spec,
      [](std::size_t r, std::size_t, const FixtureSpec& s) { return 2 * r + 1 <= s.height; }));
  bundle.attributes.push_back(linear_attribute(
      "bottom_mass", spec,
      [](std::size_t r, std::size_t, const FixtureSpec& s) { return 2 * r + 1 >= s.height; }));
  for (Attribute& a : bundle.attributes) a.network = round_through_float32(a.network);
  bundle.validate();

  FixtureModel model{std::move(bundle), 0.0};
  model.train_accuracy = accuracy(model.bundle, data);
  spdlog::debug("fixture classifier training accuracy {:.4f}", model.train_accuracy);
  return model;
}

double train_fixture(const FixtureSpec& spec, std::uint64_t seed, const fs::path& bundle_dir) {
  const FixtureModel model = train_fixture_model(spec, seed);
  save_bundle(model.bundle, bundle_dir);
  return model.train_accuracy;
}

void write_fixture_set(const FixtureSpec& spec, std::uint64_t seed, const fs::path& out_dir) {
  const fs::path bundle_dir = out_dir / "bundle";
  const fs::path image_dir = out_dir / "images";
  fs::create_directories(image_dir);
  const double train_accuracy = train_fixture(spec, seed, bundle_dir);
  const ModelBundle bundle = load_bundle(bundle_dir);

  // A separate stream keeps the example images independent of training.
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  nlohmann::json images = nlohmann::json::array();
  double reconstruction_error = 0.0;
  for (std::size_t i = 0; i < spec.images; ++i) {
    const std::size_t label = i % spec.classes;
    char name[32];
    std::snprintf(name, sizeof(name), "img_%03zu", i);
    const std::string file = std::string("images/") + name + ".pgm";
    const fs::path path = out_dir / file;
    write_image(path, make_blob(spec, label, rng));
    const Image stored = read_image(path);

    const std::vector<double> attrs = eval_attributes(bundle, stored);
    nlohmann::json attr_json = nlohmann::json::object();
    for (std::size_t a = 0; a < attrs.size(); ++a) attr_json[bundle.attributes[a].name] = attrs[a];

    const Image recon = decode(bundle, encode(bundle, stored));
    double mae = 0.0;
    for (std::size_t p = 0; p < stored.size(); ++p) mae += std::abs(recon.values()[p] - stored.values()[p]);
    mae /= static_cast<double>(stored.size());
    reconstruction_error += mae;

    images.push_back({{"id", name},
                      {"file", file},
                      {"label", label},
                      {"predicted_class", predict(bundle, stored)},
                      {"attributes", attr_json},
                      {"reconstruction_mae", mae}});
  }

  nlohmann::json manifest = {
      {"format", "cemmaf-fixtures"},
      {"version", 1},
      {"seed", seed},
      {"bundle", "bundle"},
      {"spec", format_fixture_spec(spec)},
      {"train_accuracy", train_accuracy},
      {"mean_reconstruction_mae", reconstruction_error / static_cast<double>(spec.images)},
      {"images", images},
  };
  std::ofstream out(out_dir / kFixtureManifestName, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + (out_dir / kFixtureManifestName).string());
  out << manifest.dump(2) << "\n";
}

}  // namespace cemmaf
