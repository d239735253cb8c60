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

// Pieces shared by the PN and PP solvers: the class-loss weight schedule and
// the per-solve search log.

#ifndef CEMMAF_SEARCH_HPP_
#define CEMMAF_SEARCH_HPP_

#include <span>
#include <vector>

namespace cemmaf {

// Class-loss weight for the next round: c * 10 if the round found no valid
// explanation, c / 2 if it did. Throws ConfigError unless c > 0.
double update_c(double c, bool found);

struct SearchLog {
  std::vector<double> c_schedule;       // c used by each round, in order
  std::vector<bool> round_found;        // whether each round produced a valid iterate
  std::vector<double> objective_trace;  // objective value at every accepted iterate
  int divergence_retries = 0;           // rounds restarted after a non-finite objective
};

// Signed hinge margins on a score vector.
//   attack margin:  max_{i != t0} s_i - s_t0   (PN wants this >= kappa)
//   keep margin:    s_t0 - max_{i != t0} s_i   (PP wants this >= kappa)
double attack_margin(std::span<const double> scores, std::size_t t0);
double keep_margin(std::span<const double> scores, std::size_t t0);

}  // namespace cemmaf

#endif  // CEMMAF_SEARCH_HPP_
