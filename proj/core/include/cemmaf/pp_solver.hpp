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

// Pertinent positives.
//
// A pertinent positive is a small set of superpixels that, with everything
// else set to the background value, still classifies as t0. The solver runs
// ISTA on a relaxed mask m in [0, 1]^n, minimizing
//
//   gamma * sum_i max(g_i(delta) - g_i(x0), 0)
//   + beta * ||m||_1
//   - c * min(f_t0(delta) - max_{i != t0} f_i(delta), kappa)
//
// with delta = apply_mask(x0, partition, m, background), then ranks
// superpixels by the sparsest mask that kept a kappa margin and adds them
// greedily until the masked image predicts t0.

#ifndef CEMMAF_PP_SOLVER_HPP_
#define CEMMAF_PP_SOLVER_HPP_

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "cemmaf/bundle.hpp"
#include "cemmaf/image.hpp"
#include "cemmaf/search.hpp"
#include "cemmaf/segmentation.hpp"

namespace cemmaf {

struct PpHyperParams {
  double kappa = 5.0;
  double gamma = 100.0;
  double beta = 0.1;
  double c0 = 1.0;
  int rounds = 9;
  int iters = 100;
  double step = 0.01;
  double background = 0.0;

  void validate() const;
};

enum PpTerm : std::size_t {
  kPpAttributeMonotonicity = 0,
  kPpMaskSparsity = 1,
  kPpClassLoss = 2,
};

struct PpObjective {
  double total = 0.0;
  std::array<double, 3> terms{};
};

// sign(v) * max(|v| - lambda, 0), entrywise. Throws ConfigError if lambda < 0.
std::vector<double> shrink(std::span<const double> values, double lambda);

// shrink() followed by clipping to [0, 1].
std::vector<double> soft_threshold(std::span<const double> values, double lambda);

PpObjective pp_objective(const ModelBundle& bundle, const Image& x0,
                         const SuperpixelPartition& partition, std::span<const double> mask,
                         std::size_t t0, const PpHyperParams& hp, double c);

// Entry j is f_t0 of the image keeping the first j + 1 ids of `order`.
// Throws ConfigError on duplicate or out-of-range ids.
std::vector<double> pp_score_trace(const ModelBundle& bundle, const Image& x0,
                                   const SuperpixelPartition& partition,
                                   std::span<const std::size_t> order, std::size_t t0,
                                   double background);

struct PpResult {
  MaskVector mask;                    // binary
  std::vector<std::size_t> selected;  // addition order
  Image image;                        // apply_mask(x0, partition, mask, background)
  std::vector<double> scores;
  std::size_t predicted_class = 0;
  double margin = 0.0;                // keep margin of `image`
  MaskVector relaxed_mask;            // ISTA mask used for the ranking
  std::vector<std::size_t> ranking;   // all ids by relaxed_mask, descending
  std::vector<double> score_trace;    // pp_score_trace over `selected`
  PpObjective objective;              // at relaxed_mask with `c`
  bool fallback = false;              // no ISTA iterate kept a kappa margin
  std::size_t iterate = 0;            // index into SearchLog::objective_trace
  int round = 0;
  double c = 0.0;
};

struct PpOutcome {
  std::size_t t0 = 0;
  std::vector<double> original_scores;
  std::optional<PpResult> result;
  SearchLog log;

  bool found() const { return result.has_value(); }
};

// Throws Error if x0 does not classify as `t0` (when given).
PpOutcome solve_pp(const ModelBundle& bundle, const Image& x0,
                   const SuperpixelPartition& partition, const PpHyperParams& hp,
                   std::optional<std::size_t> t0 = std::nullopt);

}  // namespace cemmaf

#endif  // CEMMAF_PP_SOLVER_HPP_
