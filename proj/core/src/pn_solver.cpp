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

#include "cemmaf/pn_solver.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "cemmaf/error.hpp"

namespace cemmaf {

void PnHyperParams::validate() const {
  if (!(kappa >= 0.0)) throw ConfigError("kappa must be >= 0");
  if (!(gamma >= 0.0) || !(beta >= 0.0) || !(eta >= 0.0) || !(nu >= 0.0) || !(c0 >= 0.0)) {
    throw ConfigError("PN weights gamma, beta, eta, nu, c0 must be >= 0");
  }
  if (!(c0 > 0.0)) throw ConfigError("c0 must be positive for the c-search");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (iters < 1) throw ConfigError("iters must be >= 1");
  if (!(step > 0.0)) throw ConfigError("step must be > 0");
}

double attribute_monotonicity_penalty(double gamma, std::span<const double> original,
                                      std::span<const double> current) {
  if (original.size() != current.size()) throw ShapeError("attribute vectors differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) acc += std::max(original[i] - current[i], 0.0);
  return gamma * acc;
}

namespace {

double l1_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc;
}

double sum_terms(const std::array<double, 5>& t) { return t[0] + t[1] + t[2] + t[3] + t[4]; }

void check_inputs(const ModelBundle& bundle, const Image& x0, const LatentCode& z_x0) {
  if (x0.shape() != bundle.image_shape) {
    throw ShapeError("image is " + x0.shape().to_string() + ", bundle expects " +
                     bundle.image_shape.to_string());
  }
  if (z_x0.size() != bundle.latent_dim) {
    throw ShapeError("latent code has " + std::to_string(z_x0.size()) + " entries, bundle expects " +
                     std::to_string(bundle.latent_dim));
  }
}

}  // namespace

PnObjective pn_objective(const ModelBundle& bundle, const Image& x0, const LatentCode& z_x0,
                         std::size_t t0, const LatentCode& z, const PnHyperParams& hp, double c) {
  check_inputs(bundle, x0, z_x0);
  if (t0 >= bundle.num_classes()) throw ShapeError("t0 out of range");
  const Image delta = decode(bundle, z);
  const std::vector<double> scores = classify(bundle, delta);
  const std::vector<double> g_x0 = eval_attributes(bundle, x0);
  const std::vector<double> g_delta = eval_attributes(bundle, delta);

  PnObjective out;
  out.terms[kPnAttributeMonotonicity] = attribute_monotonicity_penalty(hp.gamma, g_x0, g_delta);
  out.terms[kPnAttributeSparsity] = hp.beta * l1_norm(g_delta);
  out.terms[kPnClassLoss] = -c * std::min(attack_margin(scores, t0), hp.kappa);
  out.terms[kPnInputProximity] = hp.eta * squared_distance(x0.values(), delta.values());
  out.terms[kPnLatentProximity] = hp.nu * squared_distance(z_x0.values, z.values);
  out.total = sum_terms(out.terms);
  return out;
}

std::vector<AttributeChange> attribute_changes(const ModelBundle& bundle,
                                               std::span<const double> original,
                                               std::span<const double> explained) {
  if (original.size() != bundle.num_attributes() || explained.size() != bundle.num_attributes()) {
    throw ShapeError("attribute vectors do not match the bundle");
  }
  std::vector<AttributeChange> out;
  for (std::size_t i = 0; i < original.size(); ++i) {
    out.push_back({bundle.attributes[i].name, original[i], explained[i], bundle.attributes[i].threshold});
  }
  return out;
}

namespace {

// Objective value, subgradient and validity at one latent code.
struct PnPoint {
  std::vector<double> scores;
  std::vector<double> attributes;
  PnObjective objective;
  std::vector<double> gradient;
  double margin = 0.0;
  bool valid = false;
};

class PnProblem {
 public:
  PnProblem(const ModelBundle& bundle, const Image& x0, const LatentCode& z_x0, std::size_t t0,
            const PnHyperParams& hp)
      : bundle_(bundle), x0_(x0), z_x0_(z_x0), t0_(t0), hp_(hp),
        g_x0_(eval_attributes(bundle, x0)) {}

  const std::vector<double>& original_attributes() const { return g_x0_; }

  // Throws NumericError when any intermediate value is non-finite.
  PnPoint evaluate(const LatentCode& z, double c) const {
    PnPoint pt;
    Network::Pass dec = bundle_.decoder.forward_pass(z.values);
    std::vector<double> pixels(dec.output().begin(), dec.output().end());
    const std::vector<bool> inside = clamp_unit_interval(pixels);

    Network::Pass cls = bundle_.classifier.forward_pass(pixels);
    pt.scores.assign(cls.output().begin(), cls.output().end());

    std::vector<Network::Pass> attr_passes;
    attr_passes.reserve(bundle_.num_attributes());
    for (const Attribute& a : bundle_.attributes) {
      attr_passes.push_back(a.network.forward_pass(pixels));
      pt.attributes.push_back(a.direction * attr_passes.back().output()[0]);
    }

    const std::size_t rival = argmax_excluding(pt.scores, t0_);
    pt.margin = pt.scores[rival] - pt.scores[t0_];
    pt.valid = argmax(pt.scores) != t0_ && pt.margin >= hp_.kappa;

    auto& t = pt.objective.terms;
    t[kPnAttributeMonotonicity] = attribute_monotonicity_penalty(hp_.gamma, g_x0_, pt.attributes);
    t[kPnAttributeSparsity] = hp_.beta * l1_norm(pt.attributes);
    t[kPnClassLoss] = -c * std::min(pt.margin, hp_.kappa);
    t[kPnInputProximity] = hp_.eta * squared_distance(x0_.values(), pixels);
    t[kPnLatentProximity] = hp_.nu * squared_distance(z_x0_.values, z.values);
    pt.objective.total = sum_terms(t);
    if (!std::isfinite(pt.objective.total)) throw NumericError("PN objective is not finite");

    // d objective / d pixels.
    const auto x0 = x0_.values();
    std::vector<double> d_pixels(pixels.size());
    for (std::size_t p = 0; p < pixels.size(); ++p) d_pixels[p] = 2.0 * hp_.eta * (pixels[p] - x0[p]);

    for (std::size_t i = 0; i < bundle_.num_attributes(); ++i) {
      const double gi = pt.attributes[i];
      double weight = 0.0;
      if (g_x0_[i] - gi > 0.0) weight -= hp_.gamma;
      if (gi > 0.0) weight += hp_.beta;
      if (gi < 0.0) weight -= hp_.beta;
      if (weight == 0.0) continue;
      const Attribute& a = bundle_.attributes[i];
      const double seed = weight * a.direction;
      const std::vector<double> ga = a.network.pullback(attr_passes[i], std::span<const double>(&seed, 1));
      for (std::size_t p = 0; p < pixels.size(); ++p) d_pixels[p] += ga[p];
    }

    if (pt.margin < hp_.kappa && c != 0.0) {
      std::vector<double> d_scores(pt.scores.size(), 0.0);
      d_scores[rival] = -c;
      d_scores[t0_] = c;
      const std::vector<double> gf = bundle_.classifier.pullback(cls, d_scores);
      for (std::size_t p = 0; p < pixels.size(); ++p) d_pixels[p] += gf[p];
    }

    for (std::size_t p = 0; p < pixels.size(); ++p) {
      if (!inside[p]) d_pixels[p] = 0.0;
    }
    pt.gradient = bundle_.decoder.pullback(dec, d_pixels);
    for (std::size_t j = 0; j < pt.gradient.size(); ++j) {
      pt.gradient[j] += 2.0 * hp_.nu * (z.values[j] - z_x0_.values[j]);
      if (!std::isfinite(pt.gradient[j])) throw NumericError("PN subgradient is not finite");
    }
    return pt;
  }

 private:
  const ModelBundle& bundle_;
  const Image& x0_;
  const LatentCode& z_x0_;
  std::size_t t0_;
  const PnHyperParams& hp_;
  std::vector<double> g_x0_;
};

struct Candidate {
  LatentCode z;
  PnPoint point;
  double distance = 0.0;
  std::size_t iterate = 0;
  int round = 0;
  double c = 0.0;
};

struct RoundResult {
  std::vector<double> trace;
  std::optional<Candidate> best;  // closest valid iterate of this round
  LatentCode last;
};

// One round of `iters` subgradient steps from `start`. Throws NumericError on
// divergence; the caller decides whether to retry.
RoundResult run_round(const PnProblem& problem, const LatentCode& start, const LatentCode& z_x0,
                      double c, double step, int iters, int round, std::size_t trace_offset) {
  RoundResult out;
  LatentCode z = start;
  PnPoint pt = problem.evaluate(z, c);
  for (int t = 1; t <= iters; ++t) {
    const double rate = step / std::sqrt(static_cast<double>(t));
    for (std::size_t j = 0; j < z.values.size(); ++j) z.values[j] -= rate * pt.gradient[j];
    pt = problem.evaluate(z, c);
    out.trace.push_back(pt.objective.total);
    if (pt.valid) {
      const double distance = std::sqrt(squared_distance(z.values, z_x0.values));
      if (!out.best || distance < out.best->distance) {
        out.best = Candidate{z, pt, distance, trace_offset + out.trace.size() - 1, round, c};
      }
    }
  }
  out.last = std::move(z);
  return out;
}

}  // namespace

PnOutcome solve_pn(const ModelBundle& bundle, const Image& x0, const PnHyperParams& hp) {
  if (x0.shape() != bundle.image_shape) {
    throw ShapeError("image is " + x0.shape().to_string() + ", bundle expects " +
                     bundle.image_shape.to_string());
  }
  return solve_pn(bundle, x0, encode(bundle, x0), hp);
}

PnOutcome solve_pn(const ModelBundle& bundle, const Image& x0, const LatentCode& z_x0,
                   const PnHyperParams& hp) {
  hp.validate();
  check_inputs(bundle, x0, z_x0);

  PnOutcome outcome;
  outcome.z_x0 = z_x0;
  outcome.original_scores = classify(bundle, x0);
  outcome.t0 = argmax(outcome.original_scores);

  const PnProblem problem(bundle, x0, z_x0, outcome.t0, hp);
  outcome.original_attributes = problem.original_attributes();

  std::optional<Candidate> best;
  LatentCode start = z_x0;
  double c = hp.c0;
  double step = hp.step;
  for (int round = 0; round < hp.rounds; ++round) {
    outcome.log.c_schedule.push_back(c);
    std::optional<RoundResult> result;
    for (int attempt = 0; attempt < 2 && !result; ++attempt) {
      try {
        result = run_round(problem, start, z_x0, c, step, hp.iters, round,
                           outcome.log.objective_trace.size());
      } catch (const NumericError& e) {
        spdlog::warn("PN round {} diverged ({}); halving step to {}", round, e.what(), step / 2.0);
        step /= 2.0;
        if (attempt == 0) ++outcome.log.divergence_retries;
      }
    }

    const bool found = result && result->best.has_value();
    outcome.log.round_found.push_back(found);
    if (result) {
      outcome.log.objective_trace.insert(outcome.log.objective_trace.end(), result->trace.begin(),
                                         result->trace.end());
      if (found && (!best || result->best->distance < best->distance)) best = result->best;
      start = best ? best->z : result->last;
    }
    spdlog::debug("PN round {}: c={} found={} best_distance={}", round, c, found,
                  best ? best->distance : -1.0);
    c = update_c(c, found);
  }

  if (!best) return outcome;

  PnResult r;
  r.image = decode(bundle, best->z);
  r.scores = best->point.scores;
  r.predicted_class = argmax(r.scores);
  r.margin = best->point.margin;
  r.objective = best->point.objective;
  r.attributes = attribute_changes(bundle, outcome.original_attributes, best->point.attributes);
  r.iterate = best->iterate;
  r.round = best->round;
  r.c = best->c;
  r.z = std::move(best->z);

  // The returned image must satisfy the PN conditions as seen by classify().
  const std::vector<double> check = classify(bundle, r.image);
  if (check != r.scores || argmax(check) == outcome.t0 || attack_margin(check, outcome.t0) < hp.kappa) {
    throw Error("internal error: PN result fails its validity check");
  }
  outcome.result = std::move(r);
  return outcome;
}

}  // namespace cemmaf
