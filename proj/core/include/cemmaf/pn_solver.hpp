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

// Pertinent negatives.
//
// A pertinent negative is a decoded image delta = D(z) that the classifier
// puts in a class other than t0 while attribute functions only go up from
// their values on x0. The solver minimizes over the latent code z
//
//   gamma * sum_i max(g_i(x0) - g_i(delta), 0)          attribute monotonicity
//   + beta * sum_i |g_i(delta)|                        attribute sparsity
//   - c * min(max_{i != t0} f_i(delta) - f_t0(delta), kappa)   class loss
//   + eta * ||x0 - delta||^2                           input proximity
//   + nu * ||z_x0 - z||^2                              latent proximity
//
// by plain subgradient descent started at z_x0, with step / sqrt(t) in
// iteration t of a round. After every round c is updated by update_c, and
// the next round resumes from the closest valid iterate found so far (or the
// round's last iterate when none is valid). An iterate is valid when the
// predicted class differs from t0 and the attack margin is at least kappa;
// the answer is the valid iterate closest to z_x0 in latent L2 distance.

#ifndef CEMMAF_PN_SOLVER_HPP_
#define CEMMAF_PN_SOLVER_HPP_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cemmaf/bundle.hpp"
#include "cemmaf/image.hpp"
#include "cemmaf/search.hpp"

namespace cemmaf {

struct PnHyperParams {
  double kappa = 5.0;
  double gamma = 100.0;
  double beta = 100.0;
  double eta = 1.0;
  double nu = 1.0;
  double c0 = 1.0;
  int rounds = 9;
  int iters = 1000;
  double step = 0.01;

  void validate() const;
};

// Index into PnObjective::terms.
enum PnTerm : std::size_t {
  kPnAttributeMonotonicity = 0,
  kPnAttributeSparsity = 1,
  kPnClassLoss = 2,
  kPnInputProximity = 3,
  kPnLatentProximity = 4,
};

struct PnObjective {
  double total = 0.0;
  std::array<double, 5> terms{};
};

// gamma * sum_i max(original_i - current_i, 0).
double attribute_monotonicity_penalty(double gamma, std::span<const double> original,
                                      std::span<const double> current);

PnObjective pn_objective(const ModelBundle& bundle, const Image& x0, const LatentCode& z_x0,
                         std::size_t t0, const LatentCode& z, const PnHyperParams& hp, double c);

struct AttributeChange {
  std::string name;
  double original = 0.0;
  double explained = 0.0;
  double threshold = 0.0;
  double delta() const { return explained - original; }
  // delta > threshold
  bool added() const { return delta() > threshold; }
  // Negative deltas break the "only add concepts" constraint, which the
  // objective enforces softly.
  bool violated() const { return delta() < 0.0; }
};

std::vector<AttributeChange> attribute_changes(const ModelBundle& bundle,
                                               std::span<const double> original,
                                               std::span<const double> explained);

struct PnResult {
  LatentCode z;
  Image image;                       // decode(bundle, z)
  std::vector<double> scores;        // classify(bundle, image)
  std::size_t predicted_class = 0;
  double margin = 0.0;               // attack margin, >= kappa
  PnObjective objective;             // at z with the round's c
  std::vector<AttributeChange> attributes;
  std::size_t iterate = 0;           // index into SearchLog::objective_trace
  int round = 0;
  double c = 0.0;                    // c of the round that produced z
};

struct PnOutcome {
  std::size_t t0 = 0;
  LatentCode z_x0;
  std::vector<double> original_scores;
  std::vector<double> original_attributes;
  std::optional<PnResult> result;    // empty: no PN at these hyperparameters
  SearchLog log;

  bool found() const { return result.has_value(); }
};

// z_x0 from the bundle encoder (or decoder inversion), t0 = argmax f(x0).
PnOutcome solve_pn(const ModelBundle& bundle, const Image& x0, const PnHyperParams& hp);
PnOutcome solve_pn(const ModelBundle& bundle, const Image& x0, const LatentCode& z_x0,
                   const PnHyperParams& hp);

}  // namespace cemmaf

#endif  // CEMMAF_PN_SOLVER_HPP_
