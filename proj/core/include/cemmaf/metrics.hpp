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

// Batch metrics for pertinent-positive style explanations.

#ifndef CEMMAF_METRICS_HPP_
#define CEMMAF_METRICS_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cemmaf {

struct ExplanationRecord {
  std::string image_id;
  std::size_t feature_count = 0;     // superpixels selected
  std::size_t final_class = 0;       // class of the explanation image
  std::size_t t0 = 0;
  std::vector<double> score_trace;   // t0 score after each addition
};

struct ExplanationBatch {
  std::string method;
  std::vector<ExplanationRecord> records;
};

// Mean number of selected features. Throws Error on an empty batch.
double pp_feature_count(const ExplanationBatch& batch);

// Percentage of records whose final class is t0. Throws Error on an empty batch.
double pp_accuracy(const ExplanationBatch& batch);

// Spearman correlation between addition index 1..n and the rank of each score
// in descending order (rank 1 = highest, ties share the average rank). A trace
// that rises with every addition gives -1. Empty for fewer than two entries or
// when every score is tied.
std::optional<double> pp_correlation(std::span<const double> score_trace);

// Mean of pp_correlation over the records where it is defined.
std::optional<double> mean_pp_correlation(const ExplanationBatch& batch);

struct ComparisonRow {
  std::string method;
  std::size_t examples = 0;
  double feature_count = 0.0;
  double accuracy = 0.0;
  std::optional<double> correlation;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
};

// One row per batch, in input order. Throws Error if `batches` or any batch is empty.
ComparisonTable aggregate_report(std::span<const ExplanationBatch> batches);

}  // namespace cemmaf

#endif  // CEMMAF_METRICS_HPP_
