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

#include <algorithm>
#include <numeric>
#include <random>

#include "cemmaf/error.hpp"
#include "cemmaf/metrics.hpp"
#include "cemmaf/netpbm.hpp"
#include "cemmaf/pp_solver.hpp"
#include "toys.hpp"

namespace cemmaf {
namespace {

ExplanationBatch batch_of(std::vector<std::size_t> counts, std::size_t hits) {
  ExplanationBatch b{"m", {}};
  for (std::size_t i = 0; i < counts.size(); ++i) {
    b.records.push_back({"img" + std::to_string(i), counts[i], i < hits ? 0u : 1u, 0, {}});
  }
  return b;
}

TEST(FeatureCount, Mean) {
  EXPECT_EQ(pp_feature_count(batch_of({2, 4}, 2)), 3.0);
  EXPECT_EQ(pp_feature_count(batch_of({16}, 1)), 16.0);
  EXPECT_THROW(pp_feature_count(ExplanationBatch{"empty", {}}), Error);
  std::mt19937_64 rng(3);
  std::vector<std::size_t> counts(37);
  for (auto& c : counts) c = rng() % 50;
  double sum = 0.0;
  for (auto c : counts) sum += static_cast<double>(c);
  EXPECT_DOUBLE_EQ(pp_feature_count(batch_of(counts, 0)), sum / 37.0);
}

TEST(Accuracy, Percentages) {
  EXPECT_EQ(pp_accuracy(batch_of(std::vector<std::size_t>(5, 1), 5)), 100.0);
  EXPECT_EQ(pp_accuracy(batch_of(std::vector<std::size_t>(10, 1), 3)), 30.0);
  EXPECT_EQ(pp_accuracy(batch_of(std::vector<std::size_t>(4, 1), 0)), 0.0);
  EXPECT_THROW(pp_accuracy(ExplanationBatch{"empty", {}}), Error);
}

TEST(Correlation, Examples) {
  EXPECT_EQ(pp_correlation(std::vector<double>{1, 2, 3}), -1.0);
  EXPECT_EQ(pp_correlation(std::vector<double>{3, 2, 1}), 1.0);
  EXPECT_EQ(pp_correlation(std::vector<double>{2, 1, 3}), -0.5);
  EXPECT_FALSE(pp_correlation(std::vector<double>{}).has_value());
  EXPECT_FALSE(pp_correlation(std::vector<double>{4.0}).has_value());
  EXPECT_FALSE(pp_correlation(std::vector<double>{2.0, 2.0, 2.0}).has_value());
  // Tied scores share rank 2.5: ranks (2.5, 2.5, 1) against (1, 2, 3).
  EXPECT_NEAR(*pp_correlation(std::vector<double>{1, 1, 2}), -1.5 / std::sqrt(3.0), 1e-15);
}

// Spearman for tie-free data: 1 - 6 sum d^2 / (n (n^2 - 1)), with descending
// ranks found by sorting.
double spearman_by_formula(const std::vector<double>& trace) {
  const std::size_t n = trace.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return trace[a] > trace[b]; });
  std::vector<double> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = static_cast<double>(r + 1);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) d2 += (static_cast<double>(i + 1) - rank[i]) * (static_cast<double>(i + 1) - rank[i]);
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

TEST(Correlation, AgreesWithFormulaAndIsAntisymmetric) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> trace(2 + rng() % 30);
    for (double& v : trace) v = n(rng);
    const double rho = *pp_correlation(trace);
    EXPECT_GE(rho, -1.0);
    EXPECT_LE(rho, 1.0);
    EXPECT_NEAR(rho, spearman_by_formula(trace), 1e-12);
    std::vector<double> reversed(trace.rbegin(), trace.rend());
    EXPECT_NEAR(*pp_correlation(reversed), -rho, 1e-12);
  }
}

TEST(AggregateReport, Rows) {
  ExplanationBatch own{"cem-maf", {{"a", 2, 0, 0, {1.0, 2.0}}, {"b", 4, 1, 1, {0.5, 1.0, 1.5, 3.0}}}};
  const std::vector<ExplanationBatch> one = {own};
  const ComparisonTable t = aggregate_report(one);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].method, "cem-maf");
  EXPECT_EQ(t.rows[0].feature_count, 3.0);
  EXPECT_EQ(t.rows[0].accuracy, 100.0);
  EXPECT_EQ(t.rows[0].correlation, -1.0);

  ExplanationBatch lime{"lime", {{"a", 3, 2, 0, {3.0, 2.0, 1.0}}}};
  const std::vector<ExplanationBatch> two = {own, lime};
  const ComparisonTable t2 = aggregate_report(two);
  ASSERT_EQ(t2.rows.size(), 2u);
  EXPECT_EQ(t2.rows[1].method, "lime");
  EXPECT_EQ(t2.rows[1].accuracy, 0.0);
  EXPECT_EQ(t2.rows[1].correlation, 1.0);

  EXPECT_THROW(aggregate_report(std::vector<ExplanationBatch>{}), Error);
  EXPECT_THROW(aggregate_report(std::vector<ExplanationBatch>{own, ExplanationBatch{"x", {}}}), Error);
}

TEST(FixtureMetrics, SolverBatchIsFullyAccurate) {
  const ModelBundle b = load_bundle(testing::fixture_dir() / "bundle");
  const SuperpixelPartition p = grid_segment(8, 8, 16);
  ExplanationBatch batch{"cem-maf", {}};
  for (const auto& path : testing::fixture_images()) {
    const Image x0 = read_image(path);
    const PpOutcome o = solve_pp(b, x0, p, PpHyperParams{});
    ASSERT_TRUE(o.found());
    batch.records.push_back({path.stem().string(), o.result->selected.size(), predict(b, o.result->image), o.t0,
                             o.result->score_trace});
  }
  EXPECT_EQ(pp_accuracy(batch), 100.0);
}

// Full superpixel rankings from the solver against shuffles of the same ids.
// Measured direction on this fixture: the solver puts the decisive superpixel
// first, so its trace saturates after one addition and correlates weakly,
// while random orders add mass gradually and correlate strongly.
TEST(FixtureMetrics, RankingVersusRandomOrder) {
  const ModelBundle b = load_bundle(testing::fixture_dir() / "bundle");
  const SuperpixelPartition p = grid_segment(8, 8, 16);
  double own = 0.0, shuffled = 0.0;
  int images = 0;
  for (const auto& path : testing::fixture_images()) {
    const Image x0 = read_image(path);
    const PpOutcome o = solve_pp(b, x0, p, PpHyperParams{});
    own += *pp_correlation(pp_score_trace(b, x0, p, o.result->ranking, o.t0, 0.0));
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::vector<std::size_t> order = o.result->ranking;
      std::mt19937_64 rng(seed);
      std::shuffle(order.begin(), order.end(), rng);
      sum += *pp_correlation(pp_score_trace(b, x0, p, order, o.t0, 0.0));
    }
    shuffled += sum / 20.0;
    ++images;
  }
  own /= images;
  shuffled /= images;
  RecordProperty("ranking_correlation", std::to_string(own));
  RecordProperty("random_correlation", std::to_string(shuffled));
  EXPECT_LT(shuffled, own);
  EXPECT_LT(own, 0.0);
}

}  // namespace
}  // namespace cemmaf
