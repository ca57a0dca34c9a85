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
// Auction factor: the statistical bid/CPC gap, fit from this buyer's own
// completed auctions only. Competing bids never enter: the model is keyed by
// (advertiser, bucket bin) and observes (bid, price) pairs after the fact.
// Bins estimate sum(bid)/sum(CPC) (the self-normalizing form whose fixed
// point puts the mean charged CPC exactly at bid/AF), shrunk toward the
// global ratio, floored at 1.

#include <map>
#include <stdexcept>

#include "adsmarket/money.hpp"

namespace adsmarket {

struct AFConfig {
  double prior = 1.0;
  double shrinkage = 8.0;    // pseudo-observations toward the fallback ratio
  double max_factor = 5.0;
  int bucket_bins = 1;       // 1 collapses time-of-day out of the key
  double daily_decay = 0.7;  // stats decay between days to track drift
};

struct AFKey {
  int advertiser_id = 0;
  int bucket_bin = 0;

  friend auto operator<=>(const AFKey&, const AFKey&) = default;
};

/// Accumulating observations; the simulation snapshots a fitted AFModel from
/// this between buckets.
class AFStats {
 public:
  explicit AFStats(const AFConfig& cfg = {}) : cfg_(cfg) {}

  const AFConfig& config() const { return cfg_; }

  AFKey key(int advertiser_id, int bucket) const {
    const int bin = cfg_.bucket_bins <= 1 ? 0 : bucket * cfg_.bucket_bins / 8;
    return {advertiser_id, bin};
  }

  void observe(const AFKey& k, Money bid, Money cpc) {
    if (cpc <= 0 || bid <= 0) return;  // priced-at-zero events carry no ratio
    auto& cell = cells_[k];
    cell.bid_sum += money_units(bid);
    cell.cpc_sum += money_units(cpc);
    cell.n += 1.0;
    global_.bid_sum += money_units(bid);
    global_.cpc_sum += money_units(cpc);
    global_.n += 1.0;
  }

  void decay_day() {
    for (auto& [k, cell] : cells_) {
      cell.bid_sum *= cfg_.daily_decay;
      cell.cpc_sum *= cfg_.daily_decay;
      cell.n *= cfg_.daily_decay;
    }
    global_.bid_sum *= cfg_.daily_decay;
    global_.cpc_sum *= cfg_.daily_decay;
    global_.n *= cfg_.daily_decay;
  }

 private:
  friend class AFModel;
  struct Cell {
    double bid_sum = 0.0, cpc_sum = 0.0, n = 0.0;
  };
  AFConfig cfg_;
  std::map<AFKey, Cell> cells_;
  Cell global_;
};

/// Immutable fitted snapshot.
class AFModel {
 public:
  AFModel() = default;

  static AFModel fit(const AFStats& stats) {
    AFModel m;
    m.cfg_ = stats.cfg_;
    m.fallback_ = stats.global_.cpc_sum > 0.0 && stats.global_.n >= 1.0
                      ? std::max(1.0, stats.global_.bid_sum / stats.global_.cpc_sum)
                      : stats.cfg_.prior;
    m.fallback_ = std::min(m.fallback_, stats.cfg_.max_factor);
    for (const auto& [k, cell] : stats.cells_) {
      if (cell.cpc_sum <= 0.0 || cell.n <= 0.0) continue;
      const double ratio = cell.bid_sum / cell.cpc_sum;
      const double shrunk =
          (cell.n * ratio + stats.cfg_.shrinkage * m.fallback_) / (cell.n + stats.cfg_.shrinkage);
      m.factors_[k] = std::clamp(shrunk, 1.0, stats.cfg_.max_factor);
    }
    return m;
  }

  /// Always >= 1 (a next-price CPC never exceeds the bid); cold bins fall
  /// back to the global ratio, then to the configured prior.
  double factor(const AFKey& k) const {
    auto it = factors_.find(k);
    return it != factors_.end() ? it->second : std::clamp(fallback_, 1.0, cfg_.max_factor);
  }

 private:
  AFConfig cfg_;
  std::map<AFKey, double> factors_;
  double fallback_ = 1.0;
};

inline double compute_af(const AFModel& model, const AFKey& context) { return model.factor(context); }

}  // namespace adsmarket
