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
// Target-CPA bidding: the ROI-floor to target-CPA transform and the
// multiplicative real-time bid RTB = CPA * pcvr * AF * BF * CF * Alpha.
// CF enters as calibrated_cvr / pcvr, so CPA * pcvr * CF is exactly
// CPA * calibrated_cvr while the six-factor product form stays intact.

#include <cmath>
#include <stdexcept>

#include "adsmarket/money.hpp"

namespace adsmarket {

/// Eq.-style transform: the largest CPA with ROI >= gamma is
/// sale_value * sale_rate / (1 + gamma).
inline Money roi_to_target_cpa(Money sale_value, double sale_rate, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("roi_to_target_cpa: negative ROI floor");
  const double expected = money_units(sale_value) * sale_rate;
  if (expected <= 0.0) throw std::invalid_argument("roi_to_target_cpa: zero expected sale value");
  return money_from_units(expected / (1.0 + gamma));
}

struct BidContext {
  int advertiser_id = 0;
  int ad_id = 0;
  int query_id = 0;
  int bucket = 0;
  Money target_cpa = 0;
  double pctr = 0.0;
  double pcvr = 0.0;  // raw model output, before calibration
  Money daily_budget = 0;
  Money spent = 0;
  double elapsed_traffic_frac = 0.0;
  double running_cpa_units = 0.0;  // day-so-far realized CPA, 0 if undefined
};

struct BidFactors {
  double cpa_units = 0.0;
  double pcvr = 0.0;
  double af = 1.0;
  double bf = 1.0;
  double cf = 1.0;
  double alpha = 1.0;

  double product() const { return cpa_units * pcvr * af * bf * cf * alpha; }
};

struct BidDecision {
  Money rtb = 0;
  BidFactors factors;
  bool skip = false;  // budget exhausted upstream

  static BidDecision skipped() {
    BidDecision d;
    d.skip = true;
    return d;
  }
};

/// Multiplies the six factors and quantizes to money. Zero-value traffic
/// (pcvr = 0) still emits a decision with rtb = 0; non-finite factors are a
/// contract violation.
inline BidDecision compute_rtb(const BidContext& ctx, double af, double bf, double cf,
                               double alpha) {
  if (ctx.target_cpa <= 0) throw std::invalid_argument("compute_rtb: target CPA must be positive");
  if (!(ctx.pcvr >= 0.0 && ctx.pcvr <= 1.0)) throw std::invalid_argument("compute_rtb: pcvr outside [0,1]");
  BidDecision d;
  d.factors.cpa_units = money_units(ctx.target_cpa);
  d.factors.pcvr = ctx.pcvr;
  d.factors.af = af;
  d.factors.bf = bf;
  d.factors.cf = cf;
  d.factors.alpha = alpha;
  const double product = d.factors.product();
  if (!std::isfinite(product)) throw std::invalid_argument("compute_rtb: non-finite factor product");
  d.rtb = std::max<Money>(0, money_from_units(product));
  return d;
}

}  // namespace adsmarket
