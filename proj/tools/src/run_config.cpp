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

#include "cemmaf/cli/run_config.hpp"

#include <limits>

#include "cemmaf/error.hpp"

namespace cemmaf::cli {

namespace {

int as_int(const char* key, std::uint64_t value) {
  if (value > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
    throw ConfigError(std::string(key) + " is too large");
  }
  return static_cast<int>(value);
}

}  // namespace

PnHyperParams RunConfig::pn_params() const {
  PnHyperParams hp;
  hp.kappa = kappa;
  hp.gamma = gamma;
  hp.beta = beta_pn;
  hp.eta = eta;
  hp.nu = nu;
  hp.c0 = c0;
  hp.rounds = as_int("rounds", rounds);
  hp.iters = as_int("iters_pn", iters_pn);
  hp.step = step;
  return hp;
}

PpHyperParams RunConfig::pp_params() const {
  PpHyperParams hp;
  hp.kappa = kappa;
  hp.gamma = gamma;
  hp.beta = beta_pp;
  hp.c0 = c0;
  hp.rounds = as_int("rounds", rounds);
  hp.iters = as_int("iters_pp", iters_pp);
  hp.step = step;
  hp.background = background;
  return hp;
}

void RunConfig::validate() const {
  auto non_negative = [](const char* key, double v) {
    if (!(v >= 0.0)) throw ConfigError(std::string(key) + " must be >= 0");
  };
  non_negative("kappa", kappa);
  non_negative("gamma", gamma);
  non_negative("beta_pn", beta_pn);
  non_negative("eta", eta);
  non_negative("nu", nu);
  non_negative("beta_pp", beta_pp);
  if (!(c0 > 0.0)) throw ConfigError("c0 must be > 0");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (iters_pn < 1) throw ConfigError("iters_pn must be >= 1");
  if (iters_pp < 1) throw ConfigError("iters_pp must be >= 1");
  if (!(step > 0.0)) throw ConfigError("step must be > 0");
  if (n_superpixels < 1) throw ConfigError("n_superpixels must be >= 1");
  if (!(background >= 0.0 && background <= 1.0)) throw ConfigError("background must be in [0, 1]");
  pn_params();
  pp_params();
}

RunConfig parse_run_config(const KeyValues& pairs) {
  RunConfig c;
  for (const auto& [key, value] : pairs) {
    if (key == "kappa") c.kappa = parse_real(key, value);
    else if (key == "gamma") c.gamma = parse_real(key, value);
    else if (key == "beta_pn") c.beta_pn = parse_real(key, value);
    else if (key == "eta") c.eta = parse_real(key, value);
    else if (key == "nu") c.nu = parse_real(key, value);
    else if (key == "beta_pp") c.beta_pp = parse_real(key, value);
    else if (key == "c0") c.c0 = parse_real(key, value);
    else if (key == "rounds") c.rounds = parse_count(key, value);
    else if (key == "iters_pn") c.iters_pn = parse_count(key, value);
    else if (key == "iters_pp") c.iters_pp = parse_count(key, value);
    else if (key == "step") c.step = parse_real(key, value);
    else if (key == "n_superpixels") c.n_superpixels = parse_count(key, value);
    else if (key == "background") c.background = parse_real(key, value);
    else if (key == "seed") c.seed = parse_count(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_key_value_file(path));
}

std::string format_run_config(const RunConfig& c) {
  std::string out;
  auto real = [&](const char* key, double v) { out += std::string(key) + "=" + format_real(v) + "\n"; };
  auto count = [&](const char* key, std::uint64_t v) {
    out += std::string(key) + "=" + std::to_string(v) + "\n";
  };
  real("kappa", c.kappa);
  real("gamma", c.gamma);
  real("beta_pn", c.beta_pn);
  real("eta", c.eta);
  real("nu", c.nu);
  real("beta_pp", c.beta_pp);
  real("c0", c.c0);
  count("rounds", c.rounds);
  count("iters_pn", c.iters_pn);
  count("iters_pp", c.iters_pp);
  real("step", c.step);
  count("n_superpixels", c.n_superpixels);
  real("background", c.background);
  count("seed", c.seed);
  return out;
}

}  // namespace cemmaf::cli
