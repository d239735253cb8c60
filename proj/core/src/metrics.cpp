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

#include "cemmaf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cemmaf/error.hpp"

namespace cemmaf {

namespace {

void require_records(const ExplanationBatch& batch) {
  if (batch.records.empty()) throw Error("batch '" + batch.method + "' has no records");
}

// Average ranks, rank 1 for the largest value.
std::vector<double> descending_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo + 1;
    while (hi < order.size() && values[order[hi]] == values[order[lo]]) ++hi;
    const double rank = (static_cast<double>(lo + 1) + static_cast<double>(hi)) / 2.0;
    for (std::size_t k = lo; k < hi; ++k) ranks[order[k]] = rank;
    lo = hi;
  }
  return ranks;
}

}  // namespace

double pp_feature_count(const ExplanationBatch& batch) {
  require_records(batch);
  double total = 0.0;
  for (const auto& r : batch.records) total += static_cast<double>(r.feature_count);
  return total / static_cast<double>(batch.records.size());
}

double pp_accuracy(const ExplanationBatch& batch) {
  require_records(batch);
  const auto hits = std::count_if(batch.records.begin(), batch.records.end(),
                                  [](const ExplanationRecord& r) { return r.final_class == r.t0; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(batch.records.size());
}

std::optional<double> pp_correlation(std::span<const double> score_trace) {
  const std::size_t n = score_trace.size();
  if (n < 2) return std::nullopt;
  for (double v : score_trace) {
    if (!std::isfinite(v)) throw NumericError("score trace contains a non-finite value");
  }
  const std::vector<double> ranks = descending_ranks(score_trace);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double cov = 0.0;
  double var_index = 0.0;
  double var_rank = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double di = static_cast<double>(k + 1) - mean;
    const double dr = ranks[k] - mean;
    cov += di * dr;
    var_index += di * di;
    var_rank += dr * dr;
  }
  if (var_rank == 0.0) return std::nullopt;
  return std::clamp(cov / std::sqrt(var_index * var_rank), -1.0, 1.0);
}

std::optional<double> mean_pp_correlation(const ExplanationBatch& batch) {
  double total = 0.0;
  std::size_t defined = 0;
  for (const auto& r : batch.records) {
    if (auto rho = pp_correlation(r.score_trace)) {
      total += *rho;
      ++defined;
    }
  }
  if (defined == 0) return std::nullopt;
  return total / static_cast<double>(defined);
}

ComparisonTable aggregate_report(std::span<const ExplanationBatch> batches) {
  if (batches.empty()) throw Error("no explanation batches to aggregate");
  ComparisonTable table;
  for (const auto& batch : batches) {
    table.rows.push_back({batch.method, batch.records.size(), pp_feature_count(batch),
                          pp_accuracy(batch), mean_pp_correlation(batch)});
  }
  return table;
}

}  // namespace cemmaf
