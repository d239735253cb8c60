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

#include "cemmaf/pp_solver.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cemmaf/error.hpp"

namespace cemmaf {

void PpHyperParams::validate() const {
  if (!(kappa >= 0.0)) throw ConfigError("kappa must be >= 0");
  if (!(gamma >= 0.0) || !(beta >= 0.0)) throw ConfigError("PP weights gamma, beta must be >= 0");
  if (!(c0 > 0.0)) throw ConfigError("c0 must be positive for the c-search");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (iters < 1) throw ConfigError("iters must be >= 1");
  if (!(step > 0.0)) throw ConfigError("step must be > 0");
  if (!(background >= 0.0 && background <= 1.0)) throw ConfigError("background must be in [0, 1]");
}

std::vector<double> shrink(std::span<const double> values, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("soft-threshold level must be >= 0");
  std::vector<double> out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double magnitude = std::max(std::abs(values[j]) - lambda, 0.0);
    out[j] = values[j] < 0.0 ? -magnitude : magnitude;
  }
  return out;
}

std::vector<double> soft_threshold(std::span<const double> values, double lambda) {
  std::vector<double> out = shrink(values, lambda);
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

namespace {

void check_inputs(const ModelBundle& bundle, const Image& x0, const SuperpixelPartition& partition) {
  if (x0.shape() != bundle.image_shape) {
    throw ShapeError("image is " + x0.shape().to_string() + ", bundle expects " +
                     bundle.image_shape.to_string());
  }
  if (partition.height() != x0.shape().height || partition.width() != x0.shape().width) {
    throw ShapeError("partition does not match the image size");
  }
}

double increase_penalty(double gamma, std::span<const double> original,
                        std::span<const double> current) {
  double acc = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) acc += std::max(current[i] - original[i], 0.0);
  return gamma * acc;
}

double l1_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc;
}

}  // namespace

PpObjective pp_objective(const ModelBundle& bundle, const Image& x0,
                         const SuperpixelPartition& partition, std::span<const double> mask,
                         std::size_t t0, const PpHyperParams& hp, double c) {
  check_inputs(bundle, x0, partition);
  if (t0 >= bundle.num_classes()) throw ShapeError("t0 out of range");
  const Image delta = apply_mask(x0, partition, mask, hp.background);
  const std::vector<double> scores = classify(bundle, delta);

  PpObjective out;
  out.terms[kPpAttributeMonotonicity] =
      increase_penalty(hp.gamma, eval_attributes(bundle, x0), eval_attributes(bundle, delta));
  out.terms[kPpMaskSparsity] = hp.beta * l1_norm(mask);
  out.terms[kPpClassLoss] = -c * std::min(keep_margin(scores, t0), hp.kappa);
  out.total = out.terms[0] + out.terms[1] + out.terms[2];
  return out;
}

std::vector<double> pp_score_trace(const ModelBundle& bundle, const Image& x0,
                                   const SuperpixelPartition& partition,
                                   std::span<const std::size_t> order, std::size_t t0,
                                   double background) {
  check_inputs(bundle, x0, partition);
  std::vector<bool> seen(partition.count(), false);
  MaskVector mask(partition.count(), 0.0);
  std::vector<double> out;
  out.reserve(order.size());
  for (std::size_t id : order) {
    if (id >= partition.count()) throw ConfigError("superpixel id " + std::to_string(id) + " out of range");
    if (seen[id]) throw ConfigError("duplicate superpixel id " + std::to_string(id));
    seen[id] = true;
    mask[id] = 1.0;
    out.push_back(classify(bundle, apply_mask(x0, partition, mask, background))[t0]);
  }
  return out;
}

namespace {

struct PpPoint {
  std::vector<double> scores;
  PpObjective objective;
  std::vector<double> gradient;  // of the smooth terms only
  double margin = 0.0;
  bool valid = false;
};

class PpProblem {
 public:
  PpProblem(const ModelBundle& bundle, const Image& x0, const SuperpixelPartition& partition,
            std::size_t t0, const PpHyperParams& hp)
      : bundle_(bundle), x0_(x0), partition_(partition), t0_(t0), hp_(hp),
        g_x0_(eval_attributes(bundle, x0)) {}

  PpPoint evaluate(std::span<const double> mask, double c) const {
    PpPoint pt;
    const Image delta = apply_mask(x0_, partition_, mask, hp_.background);
    const auto pixels = delta.values();

    Network::Pass cls = bundle_.classifier.forward_pass(pixels);
    pt.scores.assign(cls.output().begin(), cls.output().end());
    std::vector<Network::Pass> attr_passes;
    std::vector<double> g;
    for (const Attribute& a : bundle_.attributes) {
      attr_passes.push_back(a.network.forward_pass(pixels));
      g.push_back(a.direction * attr_passes.back().output()[0]);
    }

    const std::size_t rival = argmax_excluding(pt.scores, t0_);
    pt.margin = pt.scores[t0_] - pt.scores[rival];
    pt.valid = argmax(pt.scores) == t0_ && pt.margin >= hp_.kappa;

    auto& t = pt.objective.terms;
    t[kPpAttributeMonotonicity] = increase_penalty(hp_.gamma, g_x0_, g);
    t[kPpMaskSparsity] = hp_.beta * l1_norm(mask);
    t[kPpClassLoss] = -c * std::min(pt.margin, hp_.kappa);
    pt.objective.total = t[0] + t[1] + t[2];
    if (!std::isfinite(pt.objective.total)) throw NumericError("PP objective is not finite");

    std::vector<double> d_pixels(pixels.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(g[i] - g_x0_[i] > 0.0) || hp_.gamma == 0.0) continue;
      const Attribute& a = bundle_.attributes[i];
      const double seed = hp_.gamma * a.direction;
      const std::vector<double> ga = a.network.pullback(attr_passes[i], std::span<const double>(&seed, 1));
      for (std::size_t p = 0; p < pixels.size(); ++p) d_pixels[p] += ga[p];
    }
    if (pt.margin < hp_.kappa && c != 0.0) {
      std::vector<double> d_scores(pt.scores.size(), 0.0);
      d_scores[t0_] = -c;
      d_scores[rival] = c;
      const std::vector<double> gf = bundle_.classifier.pullback(cls, d_scores);
      for (std::size_t p = 0; p < pixels.size(); ++p) d_pixels[p] += gf[p];
    }

    // d delta_p / d m_j = x0_p - background for pixels p in superpixel j.
    pt.gradient.assign(partition_.count(), 0.0);
    const std::size_t channels = x0_.shape().channels;
    const auto labels = partition_.labels();
    const auto x0 = x0_.values();
    for (std::size_t px = 0; px < labels.size(); ++px) {
      for (std::size_t ch = 0; ch < channels; ++ch) {
        const std::size_t p = px * channels + ch;
        pt.gradient[labels[px]] += d_pixels[p] * (x0[p] - hp_.background);
      }
    }
    for (double v : pt.gradient) {
      if (!std::isfinite(v)) throw NumericError("PP gradient is not finite");
    }
    return pt;
  }

 private:
  const ModelBundle& bundle_;
  const Image& x0_;
  const SuperpixelPartition& partition_;
  std::size_t t0_;
  const PpHyperParams& hp_;
  std::vector<double> g_x0_;
};

struct Candidate {
  MaskVector mask;
  PpObjective objective;
  double l1 = 0.0;
  std::size_t iterate = 0;
  int round = 0;
  double c = 0.0;
};

struct RoundResult {
  std::vector<double> trace;
  std::optional<Candidate> best;
  MaskVector last;
  PpObjective last_objective;
};

RoundResult run_round(const PpProblem& problem, const MaskVector& start, double c,
                      const PpHyperParams& hp, double step, int round, std::size_t trace_offset) {
  RoundResult out;
  MaskVector mask = start;
  PpPoint pt = problem.evaluate(mask, c);
  std::vector<double> moved(mask.size());
  for (int t = 0; t < hp.iters; ++t) {
    for (std::size_t j = 0; j < mask.size(); ++j) moved[j] = mask[j] - step * pt.gradient[j];
    mask = soft_threshold(moved, step * hp.beta);
    pt = problem.evaluate(mask, c);
    out.trace.push_back(pt.objective.total);
    if (pt.valid) {
      const double l1 = l1_norm(mask);
      if (!out.best || l1 < out.best->l1) {
        out.best = Candidate{mask, pt.objective, l1, trace_offset + out.trace.size() - 1, round, c};
      }
    }
  }
  out.last = std::move(mask);
  out.last_objective = pt.objective;
  return out;
}

}  // namespace

PpOutcome solve_pp(const ModelBundle& bundle, const Image& x0,
                   const SuperpixelPartition& partition, const PpHyperParams& hp,
                   std::optional<std::size_t> t0) {
  hp.validate();
  check_inputs(bundle, x0, partition);

  PpOutcome outcome;
  outcome.original_scores = classify(bundle, x0);
  outcome.t0 = argmax(outcome.original_scores);
  if (t0 && *t0 != outcome.t0) {
    throw Error("image classifies as " + std::to_string(outcome.t0) + ", not the requested class " +
                std::to_string(*t0));
  }
  const std::size_t target = outcome.t0;
  const PpProblem problem(bundle, x0, partition, target, hp);

  std::optional<Candidate> best;
  MaskVector start(partition.count(), 1.0);
  std::optional<Candidate> last;
  double c = hp.c0;
  double step = hp.step;
  for (int round = 0; round < hp.rounds; ++round) {
    outcome.log.c_schedule.push_back(c);
    std::optional<RoundResult> result;
    for (int attempt = 0; attempt < 2 && !result; ++attempt) {
      try {
        result = run_round(problem, start, c, hp, step, round, outcome.log.objective_trace.size());
      } catch (const NumericError& e) {
        spdlog::warn("PP round {} diverged ({}); halving step to {}", round, e.what(), step / 2.0);
        step /= 2.0;
        if (attempt == 0) ++outcome.log.divergence_retries;
      }
    }
    const bool found = result && result->best.has_value();
    outcome.log.round_found.push_back(found);
    if (result) {
      outcome.log.objective_trace.insert(outcome.log.objective_trace.end(), result->trace.begin(),
                                         result->trace.end());
      if (found && (!best || result->best->l1 < best->l1)) best = result->best;
      last = Candidate{result->last, result->last_objective, l1_norm(result->last),
                       outcome.log.objective_trace.size() - 1, round, c};
      start = std::move(result->last);
    }
    spdlog::debug("PP round {}: c={} found={}", round, c, found);
    c = update_c(c, found);
  }

  PpResult r;
  if (best) {
    r.relaxed_mask = best->mask;
    r.objective = best->objective;
    r.iterate = best->iterate;
    r.round = best->round;
    r.c = best->c;
  } else if (last) {
    r.fallback = true;
    r.relaxed_mask = last->mask;
    r.objective = last->objective;
    r.iterate = last->iterate;
    r.round = last->round;
    r.c = last->c;
  } else {
    // Every round diverged twice; rank from the starting mask.
    r.fallback = true;
    r.relaxed_mask = start;
    r.objective = pp_objective(bundle, x0, partition, start, target, hp, hp.c0);
    r.c = hp.c0;
  }

  r.ranking.resize(partition.count());
  std::iota(r.ranking.begin(), r.ranking.end(), std::size_t{0});
  std::stable_sort(r.ranking.begin(), r.ranking.end(), [&](std::size_t a, std::size_t b) {
    return r.relaxed_mask[a] > r.relaxed_mask[b];
  });

  r.mask.assign(partition.count(), 0.0);
  r.image = apply_mask(x0, partition, r.mask, hp.background);
  r.scores = classify(bundle, r.image);
  for (std::size_t k = 0; argmax(r.scores) != target && k < r.ranking.size(); ++k) {
    r.selected.push_back(r.ranking[k]);
    r.mask[r.ranking[k]] = 1.0;
    r.image = apply_mask(x0, partition, r.mask, hp.background);
    r.scores = classify(bundle, r.image);
    r.score_trace.push_back(r.scores[target]);
  }
  r.predicted_class = argmax(r.scores);
  r.margin = keep_margin(r.scores, target);
  if (r.predicted_class != target) return outcome;  // unreachable when the full mask reproduces x0

  if (classify(bundle, apply_mask(x0, partition, r.mask, hp.background)) != r.scores) {
    throw Error("internal error: PP result fails its validity check");
  }
  outcome.result = std::move(r);
  return outcome;
}

}  // namespace cemmaf
