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

#include "cemmaf/cli/report.hpp"

#include <fstream>
#include <iterator>

#include "cemmaf/error.hpp"

namespace cemmaf::cli {

using nlohmann::json;

namespace {

constexpr const char* kReportFormat = "cemmaf-report";
constexpr int kReportVersion = 1;

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("report field '") + key + "': " + e.what());
  }
}

const json& object_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("report field '") + key + "' missing");
  return j.at(key);
}

json objective_json(const ObjectiveRecord& o) { return {{"total", o.total}, {"terms", o.terms}}; }

ObjectiveRecord objective_from(const json& j) {
  return {field<double>(j, "total"), field<std::vector<double>>(j, "terms")};
}

json search_json(const SearchRecord& s) {
  return {{"c_schedule", s.c_schedule},
          {"round_found", s.round_found},
          {"objective_trace", s.objective_trace},
          {"divergence_retries", s.divergence_retries}};
}

SearchRecord search_from(const json& j) {
  return {field<std::vector<double>>(j, "c_schedule"), field<std::vector<bool>>(j, "round_found"),
          field<std::vector<double>>(j, "objective_trace"), field<int>(j, "divergence_retries")};
}

SearchRecord search_record(const SearchLog& log) {
  return {log.c_schedule, log.round_found, log.objective_trace, log.divergence_retries};
}

ObjectiveRecord objective_record(double total, std::span<const double> terms) {
  return {total, std::vector<double>(terms.begin(), terms.end())};
}

json config_json(const RunConfig& c) {
  return {{"kappa", c.kappa},       {"gamma", c.gamma},       {"beta_pn", c.beta_pn},
          {"eta", c.eta},           {"nu", c.nu},             {"beta_pp", c.beta_pp},
          {"c0", c.c0},             {"rounds", c.rounds},     {"iters_pn", c.iters_pn},
          {"iters_pp", c.iters_pp}, {"step", c.step},         {"n_superpixels", c.n_superpixels},
          {"background", c.background}, {"seed", c.seed}};
}

RunConfig config_from(const json& j) {
  RunConfig c;
  c.kappa = field<double>(j, "kappa");
  c.gamma = field<double>(j, "gamma");
  c.beta_pn = field<double>(j, "beta_pn");
  c.eta = field<double>(j, "eta");
  c.nu = field<double>(j, "nu");
  c.beta_pp = field<double>(j, "beta_pp");
  c.c0 = field<double>(j, "c0");
  c.rounds = field<std::uint64_t>(j, "rounds");
  c.iters_pn = field<std::uint64_t>(j, "iters_pn");
  c.iters_pp = field<std::uint64_t>(j, "iters_pp");
  c.step = field<double>(j, "step");
  c.n_superpixels = field<std::uint64_t>(j, "n_superpixels");
  c.background = field<double>(j, "background");
  c.seed = field<std::uint64_t>(j, "seed");
  return c;
}

json pn_json(const PnRecord& r) {
  json j = {{"found", r.found},
            {"z_x0", r.z_x0},
            {"original_attributes", r.original_attributes},
            {"search", search_json(r.search)}};
  if (!r.found) return j;
  json attrs = json::array();
  for (const auto& a : r.attributes) {
    attrs.push_back({{"name", a.name},
                     {"original", a.original},
                     {"explained", a.explained},
                     {"threshold", a.threshold},
                     {"added", a.added},
                     {"violated", a.violated}});
  }
  j["z"] = r.z;
  j["scores"] = r.scores;
  j["predicted_class"] = r.predicted_class;
  j["margin"] = r.margin;
  j["objective"] = objective_json(r.objective);
  j["attributes"] = attrs;
  j["added_attributes"] = r.added_attributes;
  j["iterate"] = r.iterate;
  j["round"] = r.round;
  j["c"] = r.c;
  j["image"] = r.image;
  return j;
}

PnRecord pn_from(const json& j) {
  PnRecord r;
  r.found = field<bool>(j, "found");
  r.z_x0 = field<std::vector<double>>(j, "z_x0");
  r.original_attributes = field<std::vector<double>>(j, "original_attributes");
  r.search = search_from(object_field(j, "search"));
  if (!r.found) return r;
  for (const json& a : object_field(j, "attributes")) {
    r.attributes.push_back({field<std::string>(a, "name"), field<double>(a, "original"),
                            field<double>(a, "explained"), field<double>(a, "threshold"),
                            field<bool>(a, "added"), field<bool>(a, "violated")});
  }
  r.z = field<std::vector<double>>(j, "z");
  r.scores = field<std::vector<double>>(j, "scores");
  r.predicted_class = field<std::size_t>(j, "predicted_class");
  r.margin = field<double>(j, "margin");
  r.objective = objective_from(object_field(j, "objective"));
  r.added_attributes = field<std::vector<std::string>>(j, "added_attributes");
  r.iterate = field<std::size_t>(j, "iterate");
  r.round = field<int>(j, "round");
  r.c = field<double>(j, "c");
  r.image = field<std::string>(j, "image");
  return r;
}

json pp_json(const PpRecord& r) {
  json j = {{"found", r.found},
            {"n_superpixels", r.n_superpixels},
            {"segments", r.segments},
            {"search", search_json(r.search)}};
  if (!r.found) return j;
  j["selected"] = r.selected;
  j["ranking"] = r.ranking;
  j["relaxed_mask"] = r.relaxed_mask;
  j["scores"] = r.scores;
  j["predicted_class"] = r.predicted_class;
  j["margin"] = r.margin;
  j["score_trace"] = r.score_trace;
  j["correlation"] = r.correlation ? json(*r.correlation) : json(nullptr);
  j["objective"] = objective_json(r.objective);
  j["fallback"] = r.fallback;
  j["iterate"] = r.iterate;
  j["round"] = r.round;
  j["c"] = r.c;
  j["image"] = r.image;
  j["mask_image"] = r.mask_image;
  return j;
}

PpRecord pp_from(const json& j) {
  PpRecord r;
  r.found = field<bool>(j, "found");
  r.n_superpixels = field<std::size_t>(j, "n_superpixels");
  r.segments = field<std::string>(j, "segments");
  r.search = search_from(object_field(j, "search"));
  if (!r.found) return r;
  r.selected = field<std::vector<std::size_t>>(j, "selected");
  r.ranking = field<std::vector<std::size_t>>(j, "ranking");
  r.relaxed_mask = field<std::vector<double>>(j, "relaxed_mask");
  r.scores = field<std::vector<double>>(j, "scores");
  r.predicted_class = field<std::size_t>(j, "predicted_class");
  r.margin = field<double>(j, "margin");
  r.score_trace = field<std::vector<double>>(j, "score_trace");
  const json& rho = object_field(j, "correlation");
  if (!rho.is_null()) r.correlation = field<double>(j, "correlation");
  r.objective = objective_from(object_field(j, "objective"));
  r.fallback = field<bool>(j, "fallback");
  r.iterate = field<std::size_t>(j, "iterate");
  r.round = field<int>(j, "round");
  r.c = field<double>(j, "c");
  r.image = field<std::string>(j, "image");
  r.mask_image = field<std::string>(j, "mask_image");
  return r;
}

}  // namespace

PnRecord make_pn_record(const PnOutcome& outcome) {
  PnRecord r;
  r.found = outcome.found();
  r.z_x0 = outcome.z_x0.values;
  r.original_attributes = outcome.original_attributes;
  r.search = search_record(outcome.log);
  if (!outcome.found()) return r;
  const PnResult& pn = *outcome.result;
  r.z = pn.z.values;
  r.scores = pn.scores;
  r.predicted_class = pn.predicted_class;
  r.margin = pn.margin;
  r.objective = objective_record(pn.objective.total, pn.objective.terms);
  for (const AttributeChange& a : pn.attributes) {
    r.attributes.push_back({a.name, a.original, a.explained, a.threshold, a.added(), a.violated()});
    if (a.added()) r.added_attributes.push_back("+" + a.name);
  }
  r.iterate = pn.iterate;
  r.round = pn.round;
  r.c = pn.c;
  return r;
}

PpRecord make_pp_record(const PpOutcome& outcome, std::size_t n_superpixels) {
  PpRecord r;
  r.found = outcome.found();
  r.n_superpixels = n_superpixels;
  r.search = search_record(outcome.log);
  if (!outcome.found()) return r;
  const PpResult& pp = *outcome.result;
  r.selected = pp.selected;
  r.ranking = pp.ranking;
  r.relaxed_mask = pp.relaxed_mask;
  r.scores = pp.scores;
  r.predicted_class = pp.predicted_class;
  r.margin = pp.margin;
  r.score_trace = pp.score_trace;
  r.correlation = pp_correlation(pp.score_trace);
  r.objective = objective_record(pp.objective.total, pp.objective.terms);
  r.fallback = pp.fallback;
  r.iterate = pp.iterate;
  r.round = pp.round;
  r.c = pp.c;
  return r;
}

json report_to_json(const ExplanationReport& report) {
  json images = json::array();
  for (const ImageRecord& im : report.images) {
    json j = {{"id", im.id},
              {"input", im.input},
              {"t0", im.t0},
              {"t0_name", im.t0 < report.class_names.size() ? report.class_names[im.t0] : ""},
              {"original_scores", im.original_scores}};
    j["pn"] = im.pn ? pn_json(*im.pn) : json(nullptr);
    j["pp"] = im.pp ? pp_json(*im.pp) : json(nullptr);
    images.push_back(std::move(j));
  }
  return {{"format", kReportFormat},
          {"version", kReportVersion},
          {"command", report.command},
          {"bundle_digest", report.bundle_digest},
          {"config", config_json(report.config)},
          {"class_names", report.class_names},
          {"images", images}};
}

ExplanationReport report_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != kReportFormat) {
    throw FormatError("not a cemmaf report");
  }
  if (field<int>(j, "version") != kReportVersion) throw FormatError("unsupported report version");
  ExplanationReport report;
  report.command = field<std::string>(j, "command");
  report.bundle_digest = field<std::string>(j, "bundle_digest");
  report.config = config_from(object_field(j, "config"));
  report.class_names = field<std::vector<std::string>>(j, "class_names");
  for (const json& im : object_field(j, "images")) {
    ImageRecord r;
    r.id = field<std::string>(im, "id");
    r.input = field<std::string>(im, "input");
    r.t0 = field<std::size_t>(im, "t0");
    r.original_scores = field<std::vector<double>>(im, "original_scores");
    if (const json& pn = object_field(im, "pn"); !pn.is_null()) r.pn = pn_from(pn);
    if (const json& pp = object_field(im, "pp"); !pp.is_null()) r.pp = pp_from(pp);
    report.images.push_back(std::move(r));
  }
  return report;
}

std::string format_report(const ExplanationReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

ExplanationReport parse_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what());
  }
  return report_from_json(j);
}

void write_report(const std::filesystem::path& path, const ExplanationReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << format_report(report);
  if (!out) throw FormatError("failed writing " + path.string());
}

ExplanationReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open report " + path.string());
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return parse_report(text);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace cemmaf::cli
