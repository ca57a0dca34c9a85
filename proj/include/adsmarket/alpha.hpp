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
// The Alpha factor: tabular Q-learning over the discretized day state
// s = <tid, sr, pg, cg, cd> with 31 discrete action ratios spanning [-3, 3]
// in 0.2 steps. The action ratio maps linearly to a bid multiplier
// 1 + ratio/10, so the neutral action is exactly 1.0.

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "adsmarket/market.hpp"
#include "adsmarket/money.hpp"
#include "adsmarket/rng.hpp"

namespace adsmarket {

inline constexpr int kAlphaActions = 31;
inline constexpr int kAlphaNeutralAction = 15;  // ratio 0.0
inline constexpr int kSrBins = 10;
inline constexpr int kGapBins = 7;

inline double alpha_ratio(int action) {
  if (action < 0 || action >= kAlphaActions) throw std::invalid_argument("alpha action out of range");
  return static_cast<double>(action - kAlphaNeutralAction) / 5.0;
}

/// Bid multiplier for a grid ratio; off-grid ratios are rejected.
inline double alpha_to_factor(double ratio) {
  const double steps = ratio * 5.0 + kAlphaNeutralAction;
  const double nearest = std::round(steps);
  if (std::abs(steps - nearest) > 1e-6 || nearest < 0 || nearest >= kAlphaActions)
    throw std::invalid_argument("alpha ratio must lie on the [-3,3] 0.2 grid");
  return 1.0 + ratio / 10.0;
}

/// r = min(15, target CPA / |real CPA - target CPA|); a zero gap takes the cap.
inline double alpha_reward(double real_cpa, double target_cpa) {
  if (target_cpa <= 0.0) throw std::invalid_argument("alpha reward needs a positive target CPA");
  const double gap = std::abs(real_cpa - target_cpa);
  if (gap == 0.0) return 15.0;
  return std::min(15.0, target_cpa / gap);
}

struct AlphaState {
  int tid = 0;  // time bucket, [0, 8)
  int sr = 0;   // spent-ratio bin, [0, 10)
  int pg = 0;   // pcvr gap bin vs previous bucket, [0, 7)
  int cg = 0;   // cpc gap bin vs previous bucket, [0, 7)
  int cd = 0;   // relative CPA-vs-target diff bin, [0, 7)

  int index() const {
    return (((tid * kSrBins + sr) * kGapBins + pg) * kGapBins + cg) * kGapBins + cd;
  }
  static int state_count() { return kNumBuckets * kSrBins * kGapBins * kGapBins * kGapBins; }
};

namespace detail {

/// Signed relative diffs into 7 bins; out-of-grid values clamp to the
/// boundary bins.
inline int gap_bin(double rel) {
  static constexpr double edges[] = {-0.5, -0.2, -0.05, 0.05, 0.2, 0.5};
  int b = 0;
  while (b < 6 && rel > edges[b]) ++b;
  return b;
}

}  // namespace detail

inline AlphaState discretize_alpha_state(int tid, double spent_ratio, double pcvr_gap,
                                         double cpc_gap, double cpa_diff) {
  AlphaState s;
  s.tid = std::clamp(tid, 0, kNumBuckets - 1);
  s.sr = std::clamp(static_cast<int>(spent_ratio * kSrBins), 0, kSrBins - 1);
  s.pg = detail::gap_bin(pcvr_gap);
  s.cg = detail::gap_bin(cpc_gap);
  s.cd = detail::gap_bin(cpa_diff);
  return s;
}

struct AlphaConfig {
  double lr = 0.3;
  double discount = 0.85;
  double epsilon = 0.1;  // exploration during training; evaluation is greedy
};

/// Sparse Q-table; unvisited entries are zero, and greedy ties prefer the
/// action closest to neutral (then the lower index) so an untrained policy
/// bids at factor 1.0.
class AlphaPolicy {
 public:
  explicit AlphaPolicy(const AlphaConfig& cfg = {}) : cfg_(cfg) {}

  const AlphaConfig& config() const { return cfg_; }

  double q(const AlphaState& s, int action) const {
    const auto it = q_.find(entry(s, action));
    return it == q_.end() ? 0.0 : it->second;
  }

  int greedy_action(const AlphaState& s) const {
    double best = -1e300;
    int best_a = kAlphaNeutralAction;
    int best_dist = 1 << 20;
    for (int a = 0; a < kAlphaActions; ++a) {
      const double v = q(s, a);
      const int dist = std::abs(a - kAlphaNeutralAction) * 2 + (a > kAlphaNeutralAction ? 1 : 0);
      if (v > best || (v == best && dist < best_dist)) {
        best = v;
        best_a = a;
        best_dist = dist;
      }
    }
    return best_a;
  }

  int select_action(const AlphaState& s, bool explore, Rng& rng) const {
    if (explore && rng.uniform01() < cfg_.epsilon)
      return static_cast<int>(rng.uniform_int(kAlphaActions));
    return greedy_action(s);
  }

  /// Standard Q-learning backup; terminal transitions skip the bootstrap.
  void step(const AlphaState& s, int action, double reward, const AlphaState& next, bool terminal) {
    if (action < 0 || action >= kAlphaActions) throw std::invalid_argument("alpha action out of range");
    double target = reward;
    if (!terminal) {
      double best = -1e300;
      for (int a = 0; a < kAlphaActions; ++a) best = std::max(best, q(next, a));
      target += cfg_.discount * best;
    }
    auto& cell = q_[entry(s, action)];
    cell += cfg_.lr * (target - cell);
  }

  size_t visited_entries() const { return q_.size(); }

  void save(std::ostream& os) const {
    os << "ADSMARKET_QTABLE_V1\n" << q_.size() << "\n";
    std::map<int64_t, double> sorted(q_.begin(), q_.end());
    char buf[48];
    for (const auto& [k, v] : sorted) {
      std::snprintf(buf, sizeof(buf), "%lld %a\n", static_cast<long long>(k), v);
      os << buf;
    }
  }

  static AlphaPolicy load(std::istream& is, const AlphaConfig& cfg = {}) {
    std::string tag;
    is >> tag;
    if (tag != "ADSMARKET_QTABLE_V1") throw std::runtime_error("not a Q-table checkpoint");
    size_t n = 0;
    is >> n;
    AlphaPolicy p(cfg);
    for (size_t i = 0; i < n; ++i) {
      long long k = 0;
      std::string v;
      is >> k >> v;
      p.q_[k] = std::strtod(v.c_str(), nullptr);
    }
    return p;
  }

 private:
  static int64_t entry(const AlphaState& s, int action) {
    return static_cast<int64_t>(s.index()) * kAlphaActions + action;
  }

  AlphaConfig cfg_;
  std::unordered_map<int64_t, double> q_;
};

}  // namespace adsmarket
