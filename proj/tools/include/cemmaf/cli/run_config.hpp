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

// Solver settings read from a flat key=value file.

#ifndef CEMMAF_CLI_RUN_CONFIG_HPP_
#define CEMMAF_CLI_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "cemmaf/key_value.hpp"
#include "cemmaf/pn_solver.hpp"
#include "cemmaf/pp_solver.hpp"

namespace cemmaf::cli {

struct RunConfig {
  double kappa = 5.0;
  double gamma = 100.0;
  double beta_pn = 100.0;
  double eta = 1.0;
  double nu = 1.0;
  double beta_pp = 0.1;
  double c0 = 1.0;
  std::uint64_t rounds = 9;
  std::uint64_t iters_pn = 1000;
  std::uint64_t iters_pp = 100;
  double step = 0.01;
  std::uint64_t n_superpixels = 200;
  double background = 0.0;
  std::uint64_t seed = 0;

  PnHyperParams pn_params() const;
  PpHyperParams pp_params() const;

  // Throws ConfigError naming the offending key.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Unknown keys are errors; missing keys keep their defaults.
RunConfig parse_run_config(const KeyValues& pairs);
RunConfig read_run_config(const std::filesystem::path& path);

// One `key=value` line per field, in declaration order. Parses back to an
// equal RunConfig.
std::string format_run_config(const RunConfig& config);

}  // namespace cemmaf::cli

#endif  // CEMMAF_CLI_RUN_CONFIG_HPP_
