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

#include "cemmaf/search.hpp"

#include "cemmaf/bundle.hpp"
#include "cemmaf/error.hpp"

namespace cemmaf {

double update_c(double c, bool found) {
  if (!(c > 0.0)) throw ConfigError("class-loss weight c must be positive");
  return found ? c / 2.0 : c * 10.0;
}

double attack_margin(std::span<const double> scores, std::size_t t0) {
  return scores[argmax_excluding(scores, t0)] - scores[t0];
}

double keep_margin(std::span<const double> scores, std::size_t t0) {
  return scores[t0] - scores[argmax_excluding(scores, t0)];
}

}  // namespace cemmaf
