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
// The auction: eCPM ranking (bid * pctr), next-price CPC with the p <= b
// guarantee, personalized CVR-based reserves (no keyword reserves), and
// per-buyer bank-account state coupling repeated auctions through dynamic
// reserves. Account updates depend only on the buyer's own history.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "adsmarket/money.hpp"

namespace adsmarket {

struct AuctionEntry {
  int ad_id = 0;
  int advertiser_id = 0;
  Money bid = 0;
  double pctr = 0.0;
  double cvr_cal = 0.0;      // calibrated CVR, drives the personalized reserve
  Money keyword_reserve = -1;  // legacy per-keyword floor; < 0 means the entry
                               // is on the CVR-personalized schedule instead
};

struct AuctionRequest {
  int64_t auction_id = 0;
  int query_id = 0;
  int slots = 1;
  std::vector<AuctionEntry> entries;

  void validate(int max_slots) const {
    if (slots < 1 || slots > max_slots) throw std::invalid_argument("slot count out of range");
    for (const auto& e : entries) {
      if (e.bid < 0) throw std::invalid_argument("negative bid");
      if (!(e.pctr >= 0.0 && e.pctr <= 1.0)) throw std::invalid_argument("pctr outside [0,1]");
    }
  }
};

struct BankAccount {
  double balance_units = 0.0;  // money-equivalent slack, own history only
};

struct ReservePolicyConfig {
  Money base_reserve = 1'000'000;  // 1 unit; CVR-personalized multiplier applies
  double mult_floor = 0.6;      // multiplier at cvr 0
  double mult_ceil = 1.4;       // multiplier at cvr 1
  // Dynamic coupling through the bank balance, bounded.
  double bank_gain = 0.05;
  double bank_scale_units = 20.0;
  double bank_lo = 0.9;
  double bank_hi = 1.15;
};

/// Monotone non-decreasing in calibrated CVR; deterministic closed form.
inline Money personalized_reserve(const ReservePolicyConfig& policy, double cvr_cal) {
  if (!(cvr_cal >= 0.0 && cvr_cal <= 1.0))
    throw std::invalid_argument("personalized_reserve: cvr outside [0,1]");
  const double mult = policy.mult_floor + (policy.mult_ceil - policy.mult_floor) * cvr_cal;
  return std::max<Money>(0, money_from_units(money_units(policy.base_reserve) * mult));
}

/// Personalized reserve tightened (loosened) when the buyer's balance is
/// high (low), clamped to the policy band.
inline Money effective_reserve(const ReservePolicyConfig& policy, double cvr_cal,
                               const BankAccount& account) {
  const double coupling = std::clamp(
      1.0 + policy.bank_gain * (account.balance_units / policy.bank_scale_units), policy.bank_lo,
      policy.bank_hi);
  return std::max<Money>(0, money_from_units(money_units(personalized_reserve(policy, cvr_cal)) * coupling));
}

struct WinnerSlot {
  int position = 0;  // 0-based slot
  int ad_id = 0;
  int advertiser_id = 0;
  Money bid = 0;
  Money cpc = 0;
  Money reserve = 0;
  double score = 0.0;  // bid_units * pctr
  double pctr = 0.0;
  double cvr_cal = 0.0;
};

struct AuctionOutcome {
  std::vector<WinnerSlot> winners;
  int excluded_below_reserve = 0;
  int losers = 0;
};

/// Entries below their personalized reserve are excluded; the rest rank by
/// score descending (ties by advertiser id); winner j pays
/// max(score_{j+1}/pctr_j, reserve_j), the last winner pays its reserve. All
/// prices honor reserve <= CPC <= bid. Zero eligible entries give an empty,
/// organic-only outcome.
inline AuctionOutcome run_auction(const AuctionRequest& req, const ReservePolicyConfig& policy,
                                  const std::vector<BankAccount>& accounts) {
  AuctionOutcome out;
  struct Ranked {
    const AuctionEntry* e;
    Money reserve;
    double score;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(req.entries.size());
  for (const auto& e : req.entries) {
    static const BankAccount kFresh{};
    const BankAccount& acct =
        e.advertiser_id >= 0 && static_cast<size_t>(e.advertiser_id) < accounts.size()
            ? accounts[static_cast<size_t>(e.advertiser_id)]
            : kFresh;
    const Money reserve = e.keyword_reserve >= 0 ? e.keyword_reserve
                                                 : effective_reserve(policy, e.cvr_cal, acct);
    if (e.bid < reserve || e.bid <= 0 || e.pctr <= 0.0) {
      out.excluded_below_reserve++;
      continue;
    }
    ranked.push_back({&e, reserve, money_units(e.bid) * e.pctr});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.e->advertiser_id < b.e->advertiser_id;
  });

  const size_t n_win = std::min(static_cast<size_t>(req.slots), ranked.size());
  out.losers = static_cast<int>(ranked.size() - n_win);
  for (size_t j = 0; j < n_win; ++j) {
    const auto& r = ranked[j];
    Money price = r.reserve;
    if (j + 1 < ranked.size()) {
      // Next-price: the minimum money amount that still beats the runner-up.
      const double needed = ranked[j + 1].score / r.e->pctr;
      price = std::max(price, static_cast<Money>(std::ceil(needed * kMicrosPerUnit)));
    }
    price = std::min(price, r.e->bid);
    price = std::max(price, r.reserve);  // reserve <= bid held at entry
    out.winners.push_back({static_cast<int>(j), r.e->ad_id, r.e->advertiser_id, r.e->bid, price,
                           r.reserve, r.score, r.e->pctr, r.e->cvr_cal});
  }
  return out;
}

/// The buyer-side result of one auction, after click realization.
struct BuyerOutcome {
  bool won = false;
  bool clicked = false;
  Money payment = 0;
  double value_estimate_units = 0.0;  // calibrated_cvr * target_cpa per click
};

/// balance += delivered value - payment. No win or no click changes nothing.
/// Never reads any other buyer's state.
inline BankAccount account_update(BankAccount account, const BuyerOutcome& outcome) {
  if (!outcome.won || !outcome.clicked) return account;
  account.balance_units += outcome.value_estimate_units - money_units(outcome.payment);
  return account;
}

}  // namespace adsmarket
