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

#include "cemmaf/cli/commands.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "cemmaf/bundle.hpp"
#include "cemmaf/cli/report.hpp"
#include "cemmaf/cli/run_config.hpp"
#include "cemmaf/error.hpp"
#include "cemmaf/fixture.hpp"
#include "cemmaf/metrics.hpp"
#include "cemmaf/netpbm.hpp"
#include "cemmaf/pn_solver.hpp"
#include "cemmaf/pp_solver.hpp"
#include "cemmaf/segmentation.hpp"

namespace cemmaf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct InputImage {
  std::string id;
  fs::path path;
};

bool is_image_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::vector<InputImage> collect_images(const std::vector<fs::path>& paths) {
  std::vector<InputImage> out;
  for (const fs::path& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (auto& f : files) out.push_back({f.stem().string(), f});
    } else if (fs::is_regular_file(p)) {
      out.push_back({p.stem().string(), p});
    } else {
      throw FormatError("no such image: " + p.string());
    }
  }
  if (out.empty()) throw ConfigError("no input images");
  std::set<std::string> ids;
  for (const auto& im : out) {
    if (!ids.insert(im.id).second) throw ConfigError("two input images share the id '" + im.id + "'");
  }
  return out;
}

RunConfig load_config(const std::optional<fs::path>& path, std::optional<std::uint64_t> seed) {
  RunConfig config = path ? read_run_config(*path) : RunConfig{};
  if (seed) config.seed = *seed;
  return config;
}

std::string relative_to(const fs::path& target, const fs::path& base) {
  return fs::absolute(target).lexically_normal().lexically_relative(fs::absolute(base).lexically_normal())
      .generic_string();
}

std::string dump_name(const std::string& id, const char* suffix, std::size_t channels) {
  return id + suffix + (channels == 1 ? ".pgm" : ".ppm");
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

// Runs work(i) for i in [0, count) on up to `jobs` threads. The first failure
// in index order is rethrown after all workers finish.
template <typename Work>
void for_each_index(std::size_t count, unsigned jobs, Work work) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        work(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct SolveContext {
  RunConfig config;
  ModelBundle bundle;
  std::vector<InputImage> images;
  ExplanationReport report;
};

SolveContext prepare(const SolveOptions& options, const char* command) {
  SolveContext ctx;
  ctx.config = load_config(options.config, options.seed);
  ctx.bundle = load_bundle(options.bundle);
  ctx.images = collect_images(options.images);
  fs::create_directories(options.out);
  ctx.report.command = command;
  ctx.report.bundle_digest = bundle_digest(options.bundle);
  ctx.report.config = ctx.config;
  ctx.report.class_names = ctx.bundle.class_names;
  ctx.report.images.resize(ctx.images.size());
  return ctx;
}

Image load_input(const ModelBundle& bundle, const fs::path& path) {
  Image image = read_image(path);
  if (image.shape() != bundle.image_shape) {
    throw ShapeError(path.string() + " is " + image.shape().to_string() + ", bundle expects " +
                     bundle.image_shape.to_string());
  }
  return image;
}

void finish(const SolveOptions& options, const SolveContext& ctx, const std::vector<double>& seconds) {
  write_report(options.out / kReportName, ctx.report);
  json timings = {{"command", ctx.report.command}, {"images", json::array()}};
  double total = 0.0;
  for (std::size_t i = 0; i < seconds.size(); ++i) {
    timings["images"].push_back({{"id", ctx.images[i].id}, {"seconds", seconds[i]}});
    total += seconds[i];
  }
  timings["total_seconds"] = total;
  write_json(options.out / kTimingsName, timings);
}

std::string class_name(const ModelBundle& bundle, std::size_t k) { return bundle.class_names.at(k); }

}  // namespace

int cmd_pn(const SolveOptions& options) {
  SolveContext ctx = prepare(options, "pn");
  const PnHyperParams hp = ctx.config.pn_params();
  std::vector<double> seconds(ctx.images.size());

  for_each_index(ctx.images.size(), options.jobs, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const InputImage& input = ctx.images[i];
    const Image x0 = load_input(ctx.bundle, input.path);
    const PnOutcome outcome = solve_pn(ctx.bundle, x0, hp);

    ImageRecord& rec = ctx.report.images[i];
    rec.id = input.id;
    rec.input = relative_to(input.path, options.out);
    rec.t0 = outcome.t0;
    rec.original_scores = outcome.original_scores;
    rec.pn = make_pn_record(outcome);
    if (outcome.found()) {
      rec.pn->image = dump_name(input.id, "_pn", x0.shape().channels);
      write_image(options.out / rec.pn->image, outcome.result->image);
    }
    seconds[i] = seconds_since(start);
  });
  finish(options, ctx, seconds);

  bool all_found = true;
  for (const ImageRecord& rec : ctx.report.images) {
    const std::string from = class_name(ctx.bundle, rec.t0);
    if (!rec.pn->found) {
      all_found = false;
      std::printf("%s: %s, no pertinent negative (c up to %s)\n", rec.id.c_str(), from.c_str(),
                  format_real(rec.pn->search.c_schedule.back()).c_str());
      continue;
    }
    std::string added;
    for (const auto& a : rec.pn->added_attributes) added += " " + a;
    std::printf("%s: %s -> %s, margin %.3f,%s\n", rec.id.c_str(), from.c_str(),
                class_name(ctx.bundle, rec.pn->predicted_class).c_str(), rec.pn->margin,
                added.empty() ? " no attribute above threshold" : added.c_str());
  }
  return all_found ? kExitOk : kExitNotFound;
}

int cmd_pp(const SolveOptions& options) {
  SolveContext ctx = prepare(options, "pp");
  const PpHyperParams hp = ctx.config.pp_params();
  const ImageShape& shape = ctx.bundle.image_shape;
  const SuperpixelPartition partition = grid_segment(shape.height, shape.width, ctx.config.n_superpixels);
  std::vector<double> seconds(ctx.images.size());

  for_each_index(ctx.images.size(), options.jobs, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const InputImage& input = ctx.images[i];
    const Image x0 = load_input(ctx.bundle, input.path);
    const PpOutcome outcome = solve_pp(ctx.bundle, x0, partition, hp);

    ImageRecord& rec = ctx.report.images[i];
    rec.id = input.id;
    rec.input = relative_to(input.path, options.out);
    rec.t0 = outcome.t0;
    rec.original_scores = outcome.original_scores;
    rec.pp = make_pp_record(outcome, partition.count());
    rec.pp->segments = input.id + "_segments.pgm";
    write_label_map(options.out / rec.pp->segments, partition);
    if (outcome.found()) {
      const PpResult& pp = *outcome.result;
      rec.pp->image = dump_name(input.id, "_pp", shape.channels);
      rec.pp->mask_image = input.id + "_pp_mask.pgm";
      write_image(options.out / rec.pp->image, pp.image);

      // Gray level k marks the k-th added superpixel; 0 is background.
      std::vector<std::uint32_t> order(partition.count(), 0);
      for (std::size_t k = 0; k < pp.selected.size(); ++k) order[pp.selected[k]] = static_cast<std::uint32_t>(k + 1);
      PnmData map{shape.width, shape.height, 1, static_cast<std::uint32_t>(std::max<std::size_t>(pp.selected.size(), 1)), {}};
      for (std::uint32_t label : partition.labels()) map.samples.push_back(order[label]);
      write_pnm(options.out / rec.pp->mask_image, map);
    }
    seconds[i] = seconds_since(start);
  });
  finish(options, ctx, seconds);

  bool all_found = true;
  for (const ImageRecord& rec : ctx.report.images) {
    if (!rec.pp->found) {
      all_found = false;
      std::printf("%s: no pertinent positive\n", rec.id.c_str());
      continue;
    }
    std::printf("%s: %s kept by %zu of %zu superpixels%s\n", rec.id.c_str(),
                class_name(ctx.bundle, rec.t0).c_str(), rec.pp->selected.size(), rec.pp->n_superpixels,
                rec.pp->fallback ? " (ranking from final iterate)" : "");
  }
  return all_found ? kExitOk : kExitNotFound;
}

namespace {

struct PpSource {
  fs::path report_dir;
  const ImageRecord* record = nullptr;
  double background = 0.0;
};

std::vector<fs::path> find_reports(const fs::path& root) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(root)) {
    out.push_back(root);
  } else if (fs::is_directory(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == kReportName) out.push_back(entry.path());
    }
  } else {
    throw FormatError("no such report file or directory: " + root.string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Scores an ordering on a report's image: every id kept, in order.
ExplanationRecord score_order(const ModelBundle& bundle, const PpSource& src,
                              const std::vector<std::size_t>& order) {
  const ImageRecord& rec = *src.record;
  const Image x0 = load_input(bundle, src.report_dir / rec.input);
  const SuperpixelPartition partition = read_label_map(src.report_dir / rec.pp->segments);
  if (partition.height() != x0.shape().height || partition.width() != x0.shape().width) {
    throw ShapeError(rec.id + ": label map does not match the image");
  }
  ExplanationRecord out;
  out.image_id = rec.id;
  out.t0 = rec.t0;
  out.feature_count = order.size();
  out.score_trace = pp_score_trace(bundle, x0, partition, order, rec.t0, src.background);
  const MaskVector mask = mask_from_selection(partition.count(), order);
  out.final_class = predict(bundle, apply_mask(x0, partition, mask, src.background));
  return out;
}

std::string format_optional(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  return buf;
}

}  // namespace

int cmd_eval(const EvalOptions& options) {
  std::vector<std::pair<fs::path, ExplanationReport>> reports;
  for (const fs::path& path : find_reports(options.reports)) {
    reports.emplace_back(path.parent_path(), read_report(path));
  }

  std::vector<PpSource> sources;
  std::map<std::string, std::size_t> by_id;
  for (const auto& [dir, report] : reports) {
    for (const ImageRecord& rec : report.images) {
      if (!rec.pp || !rec.pp->found) continue;
      if (by_id.contains(rec.id)) {
        spdlog::warn("image '{}' appears in more than one report; using the first", rec.id);
        continue;
      }
      by_id[rec.id] = sources.size();
      sources.push_back({dir, &rec, report.config.background});
    }
  }
  if (sources.empty()) throw Error("no pertinent-positive results under " + options.reports.string());

  std::vector<ExplanationBatch> batches;
  ExplanationBatch own{"cem-maf", {}};
  for (const PpSource& src : sources) {
    const PpRecord& pp = *src.record->pp;
    own.records.push_back({src.record->id, pp.selected.size(), pp.predicted_class, src.record->t0, pp.score_trace});
  }
  batches.push_back(std::move(own));

  std::optional<ModelBundle> bundle;
  auto need_bundle = [&]() -> const ModelBundle& {
    if (!options.bundle) throw ConfigError("--bundle is required to score rankings");
    if (!bundle) bundle = load_bundle(*options.bundle);
    return *bundle;
  };

  if (options.random_baseline) {
    std::mt19937_64 rng(options.seed);
    ExplanationBatch random{"random", {}};
    for (const PpSource& src : sources) {
      std::vector<std::size_t> order = src.record->pp->selected;
      std::shuffle(order.begin(), order.end(), rng);
      random.records.push_back(score_order(need_bundle(), src, order));
    }
    batches.push_back(std::move(random));
  }

  if (options.rankings) {
    std::ifstream in(*options.rankings, std::ios::binary);
    if (!in) throw FormatError("cannot open rankings " + options.rankings->string());
    json rankings;
    try {
      in >> rankings;
    } catch (const json::exception& e) {
      throw FormatError(options.rankings->string() + ": " + e.what());
    }
    if (!rankings.is_array()) throw FormatError(options.rankings->string() + ": expected a JSON array");
    std::vector<std::string> methods;
    std::map<std::string, ExplanationBatch> external;
    for (const json& entry : rankings) {
      std::string id, method;
      std::vector<std::size_t> order;
      try {
        id = entry.at("image_id").get<std::string>();
        method = entry.at("method").get<std::string>();
        order = entry.at("order").get<std::vector<std::size_t>>();
      } catch (const json::exception& e) {
        throw FormatError(options.rankings->string() + ": " + e.what());
      }
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw FormatError("ranking refers to unknown image '" + id + "'");
      if (!external.contains(method)) {
        methods.push_back(method);
        external[method].method = method;
      }
      external[method].records.push_back(score_order(need_bundle(), sources[it->second], order));
    }
    for (const auto& m : methods) batches.push_back(std::move(external[m]));
  }

  const ComparisonTable table = aggregate_report(batches);
  json rows = json::array();
  std::printf("%-16s %8s %10s %8s %8s\n", "method", "images", "#pp feat", "pp acc", "pp corr");
  for (const ComparisonRow& row : table.rows) {
    rows.push_back({{"method", row.method},
                    {"examples", row.examples},
                    {"feature_count", row.feature_count},
                    {"accuracy", row.accuracy},
                    {"correlation", row.correlation ? json(*row.correlation) : json(nullptr)}});
    std::printf("%-16s %8zu %10.2f %8.1f %8s\n", row.method.c_str(), row.examples, row.feature_count,
                row.accuracy, format_optional(row.correlation).c_str());
  }
  fs::create_directories(options.out);
  write_json(options.out / kComparisonName, {{"format", "cemmaf-comparison"}, {"version", 1}, {"rows", rows}});
  return kExitOk;
}

int cmd_fixtures(const FixtureOptions& options) {
  const FixtureSpec spec = options.spec ? read_fixture_spec(*options.spec) : FixtureSpec{};
  spec.validate();
  write_fixture_set(spec, options.seed, options.out);

  // The fixtures are far smaller than the 200-superpixel default.
  RunConfig config;
  config.n_superpixels = 16;
  config.seed = options.seed;
  std::ofstream out(options.out / kFixtureConfigName, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + (options.out / kFixtureConfigName).string());
  out << format_run_config(config);
  std::printf("wrote %zu fixture images and a bundle to %s\n", spec.images, options.out.string().c_str());
  return kExitOk;
}

int cmd_segment(const SegmentOptions& options) {
  RunConfig config = load_config(options.config, std::nullopt);
  if (options.n_superpixels) config.n_superpixels = *options.n_superpixels;
  const Image image = read_image(options.image);
  const SuperpixelPartition partition =
      grid_segment(image.shape().height, image.shape().width, config.n_superpixels);
  if (options.out.has_parent_path()) fs::create_directories(options.out.parent_path());
  write_label_map(options.out, partition);
  std::printf("%zu superpixels\n", partition.count());
  return kExitOk;
}

namespace {

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("cemmaf");
    spdlog::set_default_logger(logger);
  });
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("CEMMAF_LOG"); env && *env) {
    level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") level = spdlog::level::warn;
  }
  spdlog::set_level(level);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  configure_logging();
  CLI::App app{"Contrastive explanations with monotonic attribute functions", "cemmaf"};
  app.require_subcommand(1);

  SolveOptions pn_opts;
  SolveOptions pp_opts;
  for (auto [name, opts, help] : {std::tuple{"pn", &pn_opts, "Find pertinent negatives"},
                                  std::tuple{"pp", &pp_opts, "Find pertinent positives"}}) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--bundle", opts->bundle, "Model bundle directory")->required();
    sub->add_option("--image,--images", opts->images, "Image files or directories")->required();
    sub->add_option("--config", opts->config, "Run config (key=value)");
    sub->add_option("--out", opts->out, "Output directory")->required();
    sub->add_option("--seed", opts->seed, "Seed echoed into the report");
    sub->add_option("--jobs", opts->jobs, "Worker threads")->check(CLI::PositiveNumber);
  }

  EvalOptions eval_opts;
  CLI::App* eval = app.add_subcommand("eval", "Compare explanation metrics");
  eval->add_option("--reports", eval_opts.reports, "Report file or directory")->required();
  eval->add_option("--rankings", eval_opts.rankings, "External rankings (JSON)");
  eval->add_option("--bundle", eval_opts.bundle, "Model bundle directory");
  eval->add_option("--out", eval_opts.out, "Output directory")->required();
  eval->add_option("--seed", eval_opts.seed, "Seed for the random baseline");
  eval->add_flag("--random-baseline", eval_opts.random_baseline, "Add a shuffled-order baseline row");

  FixtureOptions fixture_opts;
  CLI::App* fixtures = app.add_subcommand("fixtures", "Train a small bundle and write test images");
  fixtures->add_option("--spec", fixture_opts.spec, "Fixture spec (key=value)");
  fixtures->add_option("--seed", fixture_opts.seed, "Training seed");
  fixtures->add_option("--out", fixture_opts.out, "Output directory")->required();

  SegmentOptions segment_opts;
  CLI::App* segment = app.add_subcommand("segment", "Write a grid superpixel label map");
  segment->add_option("--image", segment_opts.image, "Image to segment")->required();
  segment->add_option("--config", segment_opts.config, "Run config (key=value)");
  segment->add_option("--n-superpixels", segment_opts.n_superpixels, "Target superpixel count");
  segment->add_option("--out", segment_opts.out, "Label map file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    if (name == "pn") return cmd_pn(pn_opts);
    if (name == "pp") return cmd_pp(pp_opts);
    if (name == "eval") return cmd_eval(eval_opts);
    if (name == "fixtures") return cmd_fixtures(fixture_opts);
    return cmd_segment(segment_opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cemmaf: error: %s\n", e.what());
    return kExitError;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cemmaf::cli
