#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The adsmarket Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------
//
// Budget factor: a proportional controller that tracks a planned cumulative
// spend curve (the prior per-bucket traffic/performance distribution).
// Spending exactly on plan gives BF = 1.

#include <array>
#include <cmath>
#include <stdexcept>

#include "adsmarket/market.hpp"
#include "adsmarket/money.hpp"

namespace adsmarket {

struct PacingConfig {
  double gain = 4.0;
  double bf_min = 0.0;
  double bf_max = 1.0;
};

struct PacingState {
  std::array<double, kNumBuckets> planned{};  // spend fractions, sum to 1
  PacingConfig cfg;

  void validate() const {
    double total = 0.0;
    for (double f : planned) {
      if (f < 0.0) throw std::invalid_argument("pacing: negative planned fraction");
      total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("pacing: plan must sum to 1");
    if (cfg.bf_min > cfg.bf_max) throw std::invalid_argument("pacing: bf_min > bf_max");
  }

  double planned_cum(int bucket, double elapsed_frac_in_bucket) const {
    double cum = 0.0;
    for (int b = 0; b < bucket; ++b) cum += planned[static_cast<size_t>(b)];
    return cum + planned[static_cast<size_t>(bucket)] *
                     std::clamp(elapsed_frac_in_bucket, 0.0, 1.0);
  }
};

struct BfDecision {
  double factor = 1.0;
  bool skip = false;  // budget exhausted (or absent)
};

inline BfDecision compute_bf(const PacingState& state, int bucket, double elapsed_frac_in_bucket,
                             Money spent, Money budget) {
  if (budget <= 0) return {0.0, true};
  if (spent >= budget) return {0.0, true};
  const double spend_frac = money_units(spent) / money_units(budget);
  const double target = state.planned_cum(bucket, elapsed_frac_in_bucket);
  const double bf = 1.0 + state.cfg.gain * (target - spend_frac);
  return {std::clamp(bf, state.cfg.bf_min, state.cfg.bf_max), false};
}

}  // namespace adsmarket
