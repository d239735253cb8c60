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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fcntl.h>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cemmaf/cli/commands.hpp"
#include "cemmaf/cli/report.hpp"
#include "cemmaf/cli/run_config.hpp"
#include "cemmaf/error.hpp"
#include "cemmaf/metrics.hpp"
#include "cemmaf/netpbm.hpp"
#include "cemmaf/pn_solver.hpp"
#include "cemmaf/pp_solver.hpp"
#include "oracles.hpp"
#include "toys.hpp"

namespace cemmaf {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

// Silences the commands' stdout summaries while a pipeline runs.
class QuietStdout {
 public:
  QuietStdout() : saved_(dup(STDOUT_FILENO)) {
    std::fflush(stdout);
    const int null = open("/dev/null", O_WRONLY);
    dup2(null, STDOUT_FILENO);
    close(null);
  }
  ~QuietStdout() {
    std::fflush(stdout);
    dup2(saved_, STDOUT_FILENO);
    close(saved_);
  }
  QuietStdout(const QuietStdout&) = delete;
  QuietStdout& operator=(const QuietStdout&) = delete;

 private:
  int saved_;
};

int cli(const std::vector<std::string>& args) {
  QuietStdout quiet;
  std::vector<std::string> full = {"cemmaf"};
  full.insert(full.end(), args.begin(), args.end());
  return cli::run_cli(full);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fixture set written by the fixtures command, solved once and shared by the
// PP, PN and recomputation checks.
struct FixtureRun {
  fs::path dir;
  ModelBundle bundle;
  SuperpixelPartition partition;
  std::vector<Image> images;
  std::vector<PpOutcome> pp;
  std::vector<PnOutcome> pn;
  double pp_seconds = 0.0;
  double pn_seconds = 0.0;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

FixtureRun solve_fixtures(const fs::path& dir) {
  if (cli({"fixtures", "--out", dir.string()}) != cli::kExitOk) throw Error("fixture generation failed");
  FixtureRun run{dir, load_bundle(dir / "bundle"), {}, {}, {}, {}, 0.0, 0.0};
  const cli::RunConfig config = cli::read_run_config(dir / cli::kFixtureConfigName);
  const ImageShape shape = run.bundle.image_shape;
  run.partition = grid_segment(shape.height, shape.width, config.n_superpixels);
  for (const auto& entry : fs::directory_iterator(dir / "images")) run.images.push_back(read_image(entry.path()));

  auto start = Clock::now();
  for (const Image& x0 : run.images) run.pp.push_back(solve_pp(run.bundle, x0, run.partition, config.pp_params()));
  run.pp_seconds = seconds_since(start);
  start = Clock::now();
  for (const Image& x0 : run.images) run.pn.push_back(solve_pn(run.bundle, x0, config.pn_params()));
  run.pn_seconds = seconds_since(start);
  return run;
}

Verdict gradient_correctness() {
  Verdict v;
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const testing::RandomGraph r = testing::random_graph(seed);
    const Gradients reverse = backward_grad(r.graph, r.inputs, r.seed);
    worst = std::max(worst, testing::max_relative_error(reverse, testing::central_differences(r, 1e-5)));
    worst = std::max(worst, testing::max_relative_error(reverse, finite_diff_grad(r.graph, r.inputs, r.seed, 1e-5)));
  }
  const double elapsed = seconds_since(start);
  v.require(worst < 1e-4, fmt("max relative error %.3g", worst));
  v.require(elapsed < 5.0, fmt("took %.2f s", elapsed));
  if (v.pass) v.detail = fmt("20 graphs, max relative error %.2g, %.2f s", worst, elapsed);
  return v;
}

Verdict pp_guarantee(const FixtureRun& run) {
  Verdict v;
  ExplanationBatch batch{"cem-maf", {}};
  for (std::size_t i = 0; i < run.images.size(); ++i) {
    const PpOutcome& o = run.pp[i];
    v.require(o.found(), "image without a result");
    if (!o.found()) continue;
    const Image masked = apply_mask(run.images[i], run.partition, o.result->mask, 0.0);
    batch.records.push_back({std::to_string(i), o.result->selected.size(), predict(run.bundle, masked), o.t0, {}});
  }
  v.require(batch.records.size() == 10, fmt("%zu fixture images", batch.records.size()));
  const double accuracy = batch.records.empty() ? 0.0 : pp_accuracy(batch);
  v.require(accuracy == 100.0, fmt("pp accuracy %.1f", accuracy));
  v.require(run.pp_seconds < 60.0, fmt("took %.2f s", run.pp_seconds));
  if (v.pass) v.detail = fmt("10 images, pp accuracy %.0f, %.2f s", accuracy, run.pp_seconds);
  return v;
}

Verdict pn_validity(const FixtureRun& run) {
  Verdict v;
  const PnHyperParams hp;
  int found = 0;
  for (const PnOutcome& o : run.pn) {
    if (!o.found()) continue;
    ++found;
    const std::vector<double> scores = classify(run.bundle, decode(run.bundle, o.result->z));
    v.require(argmax(scores) != o.t0, "result keeps the original class");
    v.require(attack_margin(scores, o.t0) >= hp.kappa, fmt("margin %.3f", attack_margin(scores, o.t0)));
  }
  const PnOutcome constant = solve_pn(testing::constant_classifier_toy(), Image({2, 2, 1}, {0.2, 0.4, 0.6, 0.8}),
                                      LatentCode{{0.2, 0.4, 0.6, 0.8}}, hp);
  v.require(!constant.found(), "constant classifier produced a result");
  v.require(constant.log.c_schedule == std::vector<double>{1, 10, 100, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8},
            "unexpected c schedule on the constant classifier");
  if (v.pass) v.detail = fmt("%d of %zu fixture images valid, constant classifier not found", found, run.pn.size());
  return v;
}

Verdict pp_oracle_bound() {
  Verdict v;
  const auto start = Clock::now();
  std::size_t equal = 0;
  for (const testing::StripToy& toy : testing::random_strip_toys(29, 20)) {
    const ModelBundle b = toy.bundle();
    const PpOutcome o = solve_pp(b, Image({1, toy.pixels, 1}, toy.x0), grid_segment(1, toy.pixels, toy.pixels),
                                 PpHyperParams{});
    v.require(o.found(), "toy without a result");
    if (!o.found()) continue;
    const std::size_t minimum = testing::min_cardinality(toy, o.t0);
    v.require(predict(b, o.result->image) == o.t0, "mask does not predict t0");
    v.require(o.result->selected.size() >= minimum, "solver beat the exhaustive minimum");
    equal += o.result->selected.size() == minimum;
  }
  for (const testing::StripToy& toy : testing::decisive_strip_toys(23)) {
    const PpOutcome o = solve_pp(toy.bundle(), Image({1, toy.pixels, 1}, toy.x0),
                                 grid_segment(1, toy.pixels, toy.pixels), PpHyperParams{});
    v.require(o.found() && o.result->selected.size() == testing::min_cardinality(toy, 0),
              "decisive toy not solved at the minimum");
  }
  const double elapsed = seconds_since(start);
  v.require(elapsed < 30.0, fmt("took %.2f s", elapsed));
  if (v.pass) v.detail = fmt("20 toys (%zu at the minimum), 6 decisive toys exact, %.2f s", equal, elapsed);
  return v;
}

Verdict pn_oracle_proximity() {
  Verdict v;
  const auto start = Clock::now();
  PnHyperParams hp;
  hp.kappa = 0.0;
  double worst = 0.0;
  for (const auto& lc : testing::kLineCases) {
    const PnOutcome o = solve_pn(testing::line_toy(lc.slope, lc.split), Image({1, 1, 1}, {lc.x0}),
                                 LatentCode{{lc.x0}}, hp);
    v.require(o.found(), "line toy without a result");
    if (o.found()) worst = std::max(worst, std::abs(o.result->z.values[0] - testing::line_grid_minimizer(lc, hp.kappa)));
  }
  const double elapsed = seconds_since(start);
  v.require(worst <= 0.02, fmt("distance to grid minimizer %.4f", worst));
  v.require(elapsed < 10.0, fmt("took %.2f s", elapsed));
  if (v.pass) v.detail = fmt("6 line toys, max distance %.4f, %.2f s", worst, elapsed);
  return v;
}

Verdict metric_correctness() {
  Verdict v;
  v.require(pp_correlation(std::vector<double>{1, 2, 3}) == -1.0, "corr [1,2,3]");
  v.require(pp_correlation(std::vector<double>{2, 1, 3}) == -0.5, "corr [2,1,3]");
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> trace(2 + rng() % 30);
    for (double& x : trace) x = n(rng);
    const std::vector<double> reversed(trace.rbegin(), trace.rend());
    worst = std::max(worst, std::abs(*pp_correlation(trace) + *pp_correlation(reversed)));
  }
  v.require(worst < 1e-12, fmt("antisymmetry error %.3g", worst));
  if (v.pass) v.detail = fmt("exact examples, antisymmetry error %.1g on 100 traces", worst);
  return v;
}

Verdict prox_operator() {
  Verdict v;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> value(0.0, 2.0);
  std::exponential_distribution<double> level(1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double in = value(rng), lambda = level(rng);
    const double out = shrink(std::vector<double>{in}, lambda)[0];
    worst = std::max(worst, std::abs(std::abs(out) - std::max(std::abs(in) - lambda, 0.0)));
  }
  v.require(worst <= 1e-15, fmt("error %.3g", worst));
  if (v.pass) v.detail = fmt("1000 pairs, max error %.1g", worst);
  return v;
}

Verdict objective_recomputation(const FixtureRun& run, const cli::RunConfig& config) {
  Verdict v;
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < run.images.size(); ++i) {
    if (const PnOutcome& o = run.pn[i]; o.found()) {
      const PnObjective again =
          pn_objective(run.bundle, run.images[i], o.z_x0, o.t0, o.result->z, config.pn_params(), o.result->c);
      for (std::size_t t = 0; t < again.terms.size(); ++t) {
        worst = std::max(worst, std::abs(again.terms[t] - o.result->objective.terms[t]));
      }
      worst = std::max(worst, std::abs(again.total - o.result->objective.total));
      ++checked;
    }
    if (const PpOutcome& o = run.pp[i]; o.found()) {
      const PpObjective again = pp_objective(run.bundle, run.images[i], run.partition, o.result->relaxed_mask, o.t0,
                                             config.pp_params(), o.result->c);
      for (std::size_t t = 0; t < again.terms.size(); ++t) {
        worst = std::max(worst, std::abs(again.terms[t] - o.result->objective.terms[t]));
      }
      worst = std::max(worst, std::abs(again.total - o.result->objective.total));
      ++checked;
    }
  }
  v.require(checked > 0, "nothing to check");
  v.require(worst <= 1e-9, fmt("max difference %.3g", worst));
  if (v.pass) v.detail = fmt("%zu results, max difference %.2g", checked, worst);
  return v;
}

void run_pipeline(const fs::path& root) {
  const fs::path fx = root / "fixtures";
  const std::string bundle = (fx / "bundle").string(), images = (fx / "images").string();
  const std::string config = (fx / cli::kFixtureConfigName).string();
  if (cli({"fixtures", "--out", fx.string()}) != cli::kExitOk) throw Error("fixtures failed");
  if (int rc = cli({"pn", "--bundle", bundle, "--image", images, "--config", config, "--out", (root / "pn").string()});
      rc != cli::kExitOk && rc != cli::kExitNotFound) {
    throw Error("pn failed");
  }
  if (int rc = cli({"pp", "--bundle", bundle, "--image", images, "--config", config, "--out", (root / "pp").string()});
      rc != cli::kExitOk && rc != cli::kExitNotFound) {
    throw Error("pp failed");
  }
  if (cli({"eval", "--reports", (root / "pp").string(), "--random-baseline", "--bundle", bundle, "--out", (root / "eval").string()}) !=
      cli::kExitOk) {
    throw Error("eval failed");
  }
}

Verdict determinism(const fs::path& scratch) {
  Verdict v;
  run_pipeline(scratch / "a");
  run_pipeline(scratch / "b");
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(scratch / "a")) {
    if (!entry.is_regular_file() || entry.path().filename() == cli::kTimingsName) continue;
    const fs::path rel = fs::relative(entry.path(), scratch / "a");
    v.require(fs::exists(scratch / "b" / rel) && slurp(entry.path()) == slurp(scratch / "b" / rel),
              "differs: " + rel.string());
    ++compared;
  }
  v.require(compared > 0, "no output files");
  if (v.pass) v.detail = fmt("%zu files byte-identical across two runs", compared);
  return v;
}

Verdict hyperparameter_fidelity() {
  Verdict v;
  v.require(cli::format_run_config(cli::RunConfig{}) ==
                "kappa=5\ngamma=100\nbeta_pn=100\neta=1\nnu=1\nbeta_pp=0.1\nc0=1\nrounds=9\n"
                "iters_pn=1000\niters_pp=100\nstep=0.01\nn_superpixels=200\nbackground=0\nseed=0\n",
            "default config snapshot differs");
  const PnHyperParams pn = cli::RunConfig{}.pn_params();
  const PpHyperParams pp = cli::RunConfig{}.pp_params();
  v.require(pn.kappa == 5.0 && pn.gamma == 100.0 && pn.beta == 100.0 && pn.eta == 1.0 && pn.nu == 1.0 &&
                pn.c0 == 1.0 && pn.rounds == 9 && pn.iters == 1000,
            "pn parameters differ");
  v.require(pp.kappa == 5.0 && pp.gamma == 100.0 && pp.beta == 0.1 && pp.c0 == 1.0 && pp.rounds == 9 &&
                pp.iters == 100,
            "pp parameters differ");
  if (v.pass) v.detail = "default config snapshot matches";
  return v;
}

}  // namespace
}  // namespace cemmaf

int main() {
  using namespace cemmaf;
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failures += !v.pass;
    std::printf("%s %2d %-28s %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
    std::fflush(stdout);
  };

  const testing::TempDir scratch;
  std::optional<FixtureRun> run;
  std::string fixture_error;
  try {
    run = solve_fixtures(scratch / "fixtures");
  } catch (const std::exception& e) {
    fixture_error = e.what();
  }
  auto with_fixtures = [&](auto check) {
    return [&, check]() -> Verdict {
      if (!run) throw Error("fixture run failed: " + fixture_error);
      return check(*run);
    };
  };
  const cli::RunConfig config = run ? cli::read_run_config(run->dir / cli::kFixtureConfigName) : cli::RunConfig{};

  report(1, "gradient correctness", gradient_correctness);
  report(2, "pp guarantee", with_fixtures(pp_guarantee));
  report(3, "pn validity", with_fixtures(pn_validity));
  report(4, "pp oracle bound", pp_oracle_bound);
  report(5, "pn oracle proximity", pn_oracle_proximity);
  report(6, "metric correctness", metric_correctness);
  report(7, "prox operator", prox_operator);
  report(8, "objective recomputation",
         with_fixtures([&](const FixtureRun& r) { return objective_recomputation(r, config); }));
  report(9, "determinism", [&] { return determinism(scratch.path()); });
  report(10, "hyperparameter fidelity", hyperparameter_fidelity);
  return failures == 0 ? 0 : 1;
}
