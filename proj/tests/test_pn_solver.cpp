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
#include <random>

#include "cemmaf/error.hpp"
#include "cemmaf/netpbm.hpp"
#include "cemmaf/pn_solver.hpp"
#include "oracles.hpp"
#include "toys.hpp"

namespace cemmaf {
namespace {

// Frozen after the first run of the default fixture (seed 7): every image
// yields a pertinent negative at the default hyperparameters.
constexpr int kFixturePnFound = 10;

TEST(UpdateC, Schedule) {
  EXPECT_EQ(update_c(1.0, false), 10.0);
  EXPECT_EQ(update_c(10.0, true), 5.0);
  double c = 1.0;
  for (int round = 1; round < 9; ++round) c = update_c(c, false);
  EXPECT_EQ(c, 1e8);
  EXPECT_THROW(update_c(0.0, false), ConfigError);
  EXPECT_THROW(update_c(-1.0, true), ConfigError);
}

TEST(PnObjective, SelfReconstruction) {
  const ModelBundle b = testing::make_bundle(
      {2, 2, 1}, testing::linear(4, 3, std::vector<double>(12, 0.0), {0, 0, 0}), testing::identity(4),
      {testing::mean_attribute("up", 4, 1.0), testing::mean_attribute("down", 4, -1.0)});
  const Image x0({2, 2, 1}, {0.1, 0.4, 0.7, 0.2});
  const LatentCode z{{0.1, 0.4, 0.7, 0.2}};
  PnHyperParams hp;
  const PnObjective o = pn_objective(b, x0, z, 0, z, hp, 3.0);
  const double mean = (0.1 + 0.4 + 0.7 + 0.2) / 4.0;
  EXPECT_EQ(o.terms[kPnAttributeMonotonicity], 0.0);
  EXPECT_EQ(o.terms[kPnClassLoss], 0.0);
  EXPECT_EQ(o.terms[kPnInputProximity], 0.0);
  EXPECT_EQ(o.terms[kPnLatentProximity], 0.0);
  EXPECT_NEAR(o.total, hp.beta * 2.0 * mean, 1e-12);
}

TEST(PnObjective, SaturatedHingeWithZeroKappa) {
  const ModelBundle b = testing::line_toy();
  PnHyperParams hp;
  hp.kappa = 0.0;
  // f(0.2) = [0.2, 0.8]: the rival already leads.
  const PnObjective o = pn_objective(b, Image({1, 1, 1}, {0.9}), LatentCode{{0.9}}, 0, LatentCode{{0.2}}, hp, 4.0);
  EXPECT_EQ(o.terms[kPnClassLoss], 0.0);
}

TEST(PnObjective, OneDimensionalHandArithmetic) {
  const ModelBundle b = testing::line_toy();
  PnHyperParams hp;
  hp.gamma = hp.beta = hp.eta = hp.nu = 1.0;
  const Image x0({1, 1, 1}, {0.2});
  const LatentCode z_x0{{0.2}}, z{{0.5}};
  const PnObjective o = pn_objective(b, x0, z_x0, 0, z, hp, 0.0);
  // g(x0) - g(delta) = -0.3 clips to 0; |g(delta)| = 0.5; (0.2 - 0.5)^2 = 0.09 twice.
  const double diff = 0.2 - 0.5;
  const double expected[5] = {0.0, 0.5, 0.0, diff * diff, diff * diff};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(o.terms[i], expected[i], 1e-15) << "term " << i;
  EXPECT_NEAR(o.total, 0.68, 1e-15);
}

TEST(PnObjective, DimensionMismatch) {
  const ModelBundle b = testing::line_toy();
  const PnHyperParams hp;
  EXPECT_THROW(pn_objective(b, Image({1, 2, 1}), LatentCode{{0.0}}, 0, LatentCode{{0.0}}, hp, 1.0), ShapeError);
  EXPECT_THROW(pn_objective(b, Image({1, 1, 1}), LatentCode{{0.0}}, 0, LatentCode{{0.0, 1.0}}, hp, 1.0), ShapeError);
}

TEST(PnObjective, MonotonicityTermNeverGrowsWhenAttributesRise) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> offset(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> original(5), current(5);
    for (double& v : original) v = n(rng);
    for (double& v : current) v = n(rng);
    std::vector<double> raised = current;
    const double o = offset(rng);
    for (double& v : raised) v += o;
    EXPECT_LE(attribute_monotonicity_penalty(100.0, original, raised),
              attribute_monotonicity_penalty(100.0, original, current));
  }
}

TEST(PnHyperParams, Validation) {
  PnHyperParams hp;
  EXPECT_NO_THROW(hp.validate());
  hp.kappa = -1.0;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = {};
  hp.step = 0.0;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = {};
  hp.rounds = 0;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = {};
  hp.beta = 0.0;
  EXPECT_NO_THROW(hp.validate());
}

TEST(SolvePn, ConstantClassifierIsNotFound) {
  const ModelBundle b = testing::constant_classifier_toy();
  const Image x0({2, 2, 1}, {0.2, 0.4, 0.6, 0.8});
  const PnOutcome out = solve_pn(b, x0, LatentCode{{0.2, 0.4, 0.6, 0.8}}, PnHyperParams{});
  EXPECT_FALSE(out.found());
  EXPECT_EQ(out.log.c_schedule, (std::vector<double>{1, 10, 100, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8}));
  EXPECT_EQ(out.log.round_found, std::vector<bool>(9, false));
  EXPECT_EQ(out.log.objective_trace.size(), 9000u);
}

TEST(SolvePn, MatchesGridOracleOnLineToys) {
  for (const auto& lc : testing::kLineCases) {
    const ModelBundle b = testing::line_toy(lc.slope, lc.split);
    PnHyperParams hp;
    hp.kappa = 0.0;
    const PnOutcome out = solve_pn(b, Image({1, 1, 1}, {lc.x0}), LatentCode{{lc.x0}}, hp);
    ASSERT_TRUE(out.found()) << lc.x0;
    EXPECT_EQ(out.t0, 0u);
    const double oracle = testing::line_grid_minimizer(lc, hp.kappa);
    EXPECT_NEAR(out.result->z.values[0], oracle, 0.02) << "slope " << lc.slope << " split " << lc.split;
  }
}

TEST(SolvePn, DivergentRoundsAreRetriedOnce) {
  const ModelBundle b = testing::line_toy();
  PnHyperParams hp;
  hp.step = 1e300;
  hp.rounds = 2;
  hp.iters = 5;
  const PnOutcome out = solve_pn(b, Image({1, 1, 1}, {0.9}), LatentCode{{0.9}}, hp);
  EXPECT_FALSE(out.found());
  EXPECT_EQ(out.log.divergence_retries, 2);
  EXPECT_EQ(out.log.c_schedule, (std::vector<double>{1.0, 10.0}));
  EXPECT_TRUE(out.log.objective_trace.empty());
}

class FixturePn : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    bundle_ = new ModelBundle(load_bundle(testing::fixture_dir() / "bundle"));
    for (const auto& p : testing::fixture_images()) {
      images_.push_back(read_image(p));
      outcomes_.push_back(solve_pn(*bundle_, images_.back(), PnHyperParams{}));
    }
  }
  static void TearDownTestSuite() {
    delete bundle_;
    bundle_ = nullptr;
  }
  static inline ModelBundle* bundle_ = nullptr;
  static inline std::vector<Image> images_;
  static inline std::vector<PnOutcome> outcomes_;
};

TEST_F(FixturePn, FrozenSuccessCount) {
  int found = 0;
  for (const auto& o : outcomes_) found += o.found();
  EXPECT_EQ(found, kFixturePnFound);
  EXPECT_GE(found, 8);
}

TEST_F(FixturePn, ResultsSatisfyValidityAsClassified) {
  const PnHyperParams hp;
  for (const auto& o : outcomes_) {
    if (!o.found()) continue;
    const PnResult& r = *o.result;
    EXPECT_EQ(r.image, decode(*bundle_, r.z));
    const std::vector<double> scores = classify(*bundle_, r.image);
    EXPECT_NE(argmax(scores), o.t0);
    EXPECT_GE(attack_margin(scores, o.t0), hp.kappa);
    EXPECT_EQ(r.predicted_class, argmax(scores));
  }
}

TEST_F(FixturePn, LoggedTermsMatchRecomputation) {
  const PnHyperParams hp;
  for (std::size_t i = 0; i < outcomes_.size(); ++i) {
    const PnOutcome& o = outcomes_[i];
    if (!o.found()) continue;
    const PnObjective again = pn_objective(*bundle_, images_[i], o.z_x0, o.t0, o.result->z, hp, o.result->c);
    for (std::size_t t = 0; t < 5; ++t) EXPECT_NEAR(o.result->objective.terms[t], again.terms[t], 1e-9);
    EXPECT_NEAR(o.result->objective.total, again.total, 1e-9);
    EXPECT_EQ(o.log.objective_trace.at(o.result->iterate), o.result->objective.total);
  }
}

TEST_F(FixturePn, AddedAttributesFollowThresholds) {
  for (const auto& o : outcomes_) {
    if (!o.found()) continue;
    const std::vector<double> explained = eval_attributes(*bundle_, o.result->image);
    ASSERT_EQ(o.result->attributes.size(), bundle_->num_attributes());
    for (std::size_t a = 0; a < explained.size(); ++a) {
      const AttributeChange& change = o.result->attributes[a];
      EXPECT_EQ(change.original, o.original_attributes[a]);
      EXPECT_NEAR(change.explained, explained[a], 1e-12);
      EXPECT_EQ(change.added(), change.explained - change.original > bundle_->attributes[a].threshold);
      EXPECT_EQ(change.violated(), change.explained - change.original < 0.0);
    }
  }
}

TEST_F(FixturePn, SelectsClosestValidIterate) {
  for (const auto& o : outcomes_) {
    if (!o.found()) continue;
    // The winning round must have been logged as successful.
    EXPECT_TRUE(o.log.round_found.at(static_cast<std::size_t>(o.result->round)));
    EXPECT_EQ(o.log.c_schedule.at(static_cast<std::size_t>(o.result->round)), o.result->c);
  }
}

TEST_F(FixturePn, Deterministic) {
  const PnOutcome again = solve_pn(*bundle_, images_[0], PnHyperParams{});
  ASSERT_EQ(again.found(), outcomes_[0].found());
  EXPECT_EQ(again.result->z, outcomes_[0].result->z);
  EXPECT_EQ(again.log.objective_trace, outcomes_[0].log.objective_trace);
}

}  // namespace
}  // namespace cemmaf
