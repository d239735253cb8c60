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

// Explanation reports: what the pn and pp commands write and eval reads.
// Reports are JSON; writing, reading and writing again gives the same bytes.

#ifndef CEMMAF_CLI_REPORT_HPP_
#define CEMMAF_CLI_REPORT_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cemmaf/cli/run_config.hpp"
#include "cemmaf/metrics.hpp"
#include "cemmaf/pn_solver.hpp"
#include "cemmaf/pp_solver.hpp"

namespace cemmaf::cli {

inline constexpr const char* kReportName = "report.json";
inline constexpr const char* kTimingsName = "timings.json";

struct ObjectiveRecord {
  double total = 0.0;
  std::vector<double> terms;
  friend bool operator==(const ObjectiveRecord&, const ObjectiveRecord&) = default;
};

struct SearchRecord {
  std::vector<double> c_schedule;
  std::vector<bool> round_found;
  std::vector<double> objective_trace;
  int divergence_retries = 0;
  friend bool operator==(const SearchRecord&, const SearchRecord&) = default;
};

struct AttributeRecord {
  std::string name;
  double original = 0.0;
  double explained = 0.0;
  double threshold = 0.0;
  bool added = false;
  bool violated = false;
  friend bool operator==(const AttributeRecord&, const AttributeRecord&) = default;
};

struct PnRecord {
  bool found = false;
  std::vector<double> z_x0;
  std::vector<double> original_attributes;
  SearchRecord search;
  // Meaningful only when found.
  std::vector<double> z;
  std::vector<double> scores;
  std::size_t predicted_class = 0;
  double margin = 0.0;
  ObjectiveRecord objective;
  std::vector<AttributeRecord> attributes;
  std::vector<std::string> added_attributes;  // "+name"
  std::size_t iterate = 0;
  int round = 0;
  double c = 0.0;
  std::string image;  // dump file name, relative to the report
  friend bool operator==(const PnRecord&, const PnRecord&) = default;
};

struct PpRecord {
  bool found = false;
  std::size_t n_superpixels = 0;
  std::string segments;  // label map file name
  SearchRecord search;
  std::vector<std::size_t> selected;
  std::vector<std::size_t> ranking;
  std::vector<double> relaxed_mask;
  std::vector<double> scores;
  std::size_t predicted_class = 0;
  double margin = 0.0;
  std::vector<double> score_trace;
  std::optional<double> correlation;
  ObjectiveRecord objective;
  bool fallback = false;
  std::size_t iterate = 0;
  int round = 0;
  double c = 0.0;
  std::string image;
  std::string mask_image;
  friend bool operator==(const PpRecord&, const PpRecord&) = default;
};

struct ImageRecord {
  std::string id;
  std::string input;  // relative to the report directory
  std::size_t t0 = 0;
  std::vector<double> original_scores;
  std::optional<PnRecord> pn;
  std::optional<PpRecord> pp;
  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct ExplanationReport {
  std::string command;
  std::string bundle_digest;
  RunConfig config;
  std::vector<std::string> class_names;
  std::vector<ImageRecord> images;
  friend bool operator==(const ExplanationReport&, const ExplanationReport&) = default;
};

PnRecord make_pn_record(const PnOutcome& outcome);
PpRecord make_pp_record(const PpOutcome& outcome, std::size_t n_superpixels);

nlohmann::json report_to_json(const ExplanationReport& report);
// Throws FormatError on missing or mistyped fields.
ExplanationReport report_from_json(const nlohmann::json& json);

std::string format_report(const ExplanationReport& report);
ExplanationReport parse_report(const std::string& text);
void write_report(const std::filesystem::path& path, const ExplanationReport& report);
ExplanationReport read_report(const std::filesystem::path& path);

}  // namespace cemmaf::cli

#endif  // CEMMAF_CLI_REPORT_HPP_
