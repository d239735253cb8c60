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

// The cemmaf subcommands. Each cmd_* function throws on errors; run_cli maps
// exceptions to exit status 1.
//
// Exit status: 0 success, 1 error, 2 no explanation found for some image.

#ifndef CEMMAF_CLI_COMMANDS_HPP_
#define CEMMAF_CLI_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cemmaf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotFound = 2;

inline constexpr const char* kComparisonName = "comparison.json";
inline constexpr const char* kFixtureConfigName = "run.cfg";

struct SolveOptions {
  std::filesystem::path bundle;
  std::vector<std::filesystem::path> images;  // files or directories of .pgm/.ppm
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
};

int cmd_pn(const SolveOptions& options);
int cmd_pp(const SolveOptions& options);

struct EvalOptions {
  std::filesystem::path reports;                  // report file or directory searched recursively
  std::optional<std::filesystem::path> rankings;  // [{image_id, method, order}]
  std::optional<std::filesystem::path> bundle;    // needed to score rankings
  std::filesystem::path out;
  std::uint64_t seed = 0;
  bool random_baseline = false;  // adds a "random" row: selected ids in shuffled order
};

int cmd_eval(const EvalOptions& options);

struct FixtureOptions {
  std::optional<std::filesystem::path> spec;
  std::uint64_t seed = 7;
  std::filesystem::path out;
};

int cmd_fixtures(const FixtureOptions& options);

struct SegmentOptions {
  std::filesystem::path image;
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> n_superpixels;  // overrides the config
  std::filesystem::path out;                   // label map file
};

int cmd_segment(const SegmentOptions& options);

// Full command line, including argv[0].
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace cemmaf::cli

#endif  // CEMMAF_CLI_COMMANDS_HPP_
