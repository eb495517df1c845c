// Copyright 2026 The cmaze Authors
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

#include "cmaze/state.h"

#include <cmath>
#include <stdexcept>

namespace cmaze {

void FrictionParams::Validate() const {
  for (double v : AsArray()) {
    if (!std::isfinite(v) || v < 0) {
      throw std::invalid_argument(
          "FrictionParams: entries must be finite and non-negative");
    }
  }
}

void to_json(nlohmann::json& j, const FrictionParams& mu) {
  j = nlohmann::json{{"slide", mu.slide},
                     {"spin", mu.spin},
                     {"roll", mu.roll},
                     {"floss", mu.floss}};
}

void from_json(const nlohmann::json& j, FrictionParams& mu) {
  mu.slide = j.value("slide", mu.slide);
  mu.spin = j.value("spin", mu.spin);
  mu.roll = j.value("roll", mu.roll);
  mu.floss = j.value("floss", mu.floss);
}

void to_json(nlohmann::json& j, const ReducedState& x) {
  j = nlohmann::json{{"beta", x.beta},           {"gamma", x.gamma},
                     {"theta", x.theta},         {"theta_dot", x.theta_dot},
                     {"ring", x.ring.value}};
}

void from_json(const nlohmann::json& j, ReducedState& x) {
  x.beta = j.at("beta").get<double>();
  x.gamma = j.at("gamma").get<double>();
  x.theta = j.at("theta").get<double>();
  x.theta_dot = j.at("theta_dot").get<double>();
  x.ring.value = j.at("ring").get<int>();
}

}  // namespace cmaze
