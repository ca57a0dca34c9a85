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

#include "adsmarket/market.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace adsmarket;

TEST(generate_market, deterministic_bytes_for_fixed_seed) {
  const auto a = generate_market(42, 10, 500);
  const auto b = generate_market(42, 10, 500);
  EXPECT_EQ(market_to_string(a), market_to_string(b));
  const auto c = generate_market(43, 10, 500);
  EXPECT_NE(market_to_string(a), market_to_string(c));
}

TEST(generate_market, experiment_group_scale) {
  const auto m = generate_market(7, 670, 2000);
  EXPECT_EQ(m.advertisers.size(), 670u);
  EXPECT_GT(m.total_ads(), 670 / 2);
}

TEST(generate_market, every_profile_satisfies_roi_cap) {
  const auto m = generate_market(11, 60, 600);
  for (const auto& adv : m.advertisers) {
    // Re-evaluate the cap independently of the validate() path.
    const double cap = money_units(adv.sale_value) * adv.sale_rate / (1.0 + adv.roi_floor);
    EXPECT_LE(money_units(adv.target_cpa), cap + 1e-9) << "advertiser " << adv.id;
    EXPECT_GT(adv.target_cpa, 0);
  }
}

TEST(generate_market, rejects_degenerate_inputs) {
  EXPECT_THROW(generate_market(1, 0, 500), std::invalid_argument);
  EXPECT_THROW(generate_market(1, 10, 50), std::invalid_argument);
}

TEST(market_file, round_trips_through_text) {
  const auto m = generate_market(5, 12, 300);
  std::stringstream s;
  save_market(m, s);
  const auto loaded = load_market(s);
  EXPECT_EQ(market_to_string(m), market_to_string(loaded));
  EXPECT_EQ(loaded.advertisers.size(), m.advertisers.size());
  EXPECT_EQ(loaded.query_pool.size(), m.query_pool.size());
}

namespace {

Query probe_query(const MarketSpec& m, int pattern) {
  Query q;
  q.id = pattern;
  q.text = m.query_pool[static_cast<size_t>(pattern)].text;
  q.user_segment = 0;
  q.bucket = 0;
  return q;
}

}  // namespace

TEST(sample_click, degenerate_probabilities) {
  auto m = generate_market(3, 5, 300);
  const Query q = probe_query(m, 0);
  const Ad& ad = m.ad(0);
  const int vertical = m.owner(0).vertical;
  Rng rng(1);
  auto fmt = default_format_counts();

  m.gt.ctr_bias = -1e9;  // ctr == 0 everywhere
  for (int i = 0; i < 100; ++i) EXPECT_FALSE(sample_click(m.gt, q, ad, vertical, fmt, rng));
  m.gt.ctr_bias = 1e9;  // ctr == 1 everywhere
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(sample_click(m.gt, q, ad, vertical, fmt, rng));
}

TEST(sample_click, matches_probability_in_the_large) {
  auto m = generate_market(3, 5, 300);
  const Query q = probe_query(m, 1);
  const Ad& ad = m.ad(0);
  const int vertical = m.owner(0).vertical;
  const auto fmt = default_format_counts();
  // Force ctr to exactly 0.3 by zeroing the structure and solving the bias.
  m.gt.ctr_overlap_w = m.gt.ctr_quality_w = m.gt.ctr_affinity_w = 0.0;
  m.gt.ctr_bias = std::log(0.3 / 0.7);
  ASSERT_NEAR(m.gt.ctr(q, ad, vertical, fmt), 0.3, 1e-12);

  Rng rng(99);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += sample_click(m.gt, q, ad, vertical, fmt, rng) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.3, 0.01);
}

TEST(sample_conversion, mirrors_click_sampling) {
  auto m = generate_market(3, 5, 300);
  const Query q = probe_query(m, 2);
  const Ad& ad = m.ad(0);
  const int vertical = m.owner(0).vertical;
  Rng rng(5);

  m.gt.cvr_bias = -1e9;
  for (int i = 0; i < 50; ++i) EXPECT_FALSE(sample_conversion(m.gt, q, ad, vertical, 0, rng));
  m.gt.cvr_bias = 1e9;
  for (int i = 0; i < 50; ++i) EXPECT_TRUE(sample_conversion(m.gt, q, ad, vertical, 0, rng));

  m.gt.cvr_affinity_w = m.gt.cvr_overlap_w = 0.0;
  m.gt.conversion_type_offset = {0.0, 0.0, 0.0};
  m.gt.cvr_bias = std::log(0.3 / 0.7);
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += sample_conversion(m.gt, q, ad, vertical, 1, rng) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.3, 0.01);
  EXPECT_THROW(m.gt.cvr(q, ad, vertical, 99), std::invalid_argument);
}

TEST(platform_revenue, empty_ledger_is_zero) {
  SimLedger ledger(4);
  EXPECT_EQ(platform_revenue(ledger), 0);
}

TEST(platform_revenue, single_advertiser_click_sum) {
  SimLedger ledger(1);
  ledger.rows[0].daily_budget = money_from_units(1000);
  for (int i = 0; i < 10; ++i) ledger.record_click(0, money_from_units(2.0));
  EXPECT_EQ(platform_revenue(ledger), money_from_units(20.0));
}

TEST(platform_revenue, click_form_equals_conversion_form) {
  SimLedger ledger(5);
  Rng rng(17);
  for (int a = 0; a < 5; ++a) {
    ledger.rows[static_cast<size_t>(a)].daily_budget = money_from_units(1e9);
    const int clicks = 20 + static_cast<int>(rng.uniform_int(50));
    for (int c = 0; c < clicks; ++c) {
      ledger.record_click(a, money_from_units(rng.uniform(0.5, 6.0)));
      if (rng.bernoulli(0.4)) ledger.record_conversion(a);
    }
    if (ledger.rows[static_cast<size_t>(a)].conversions == 0) ledger.record_conversion(a);
  }
  const double click_form = money_units(platform_revenue(ledger));
  const double conv_form = platform_revenue_by_conversions(ledger);
  EXPECT_NEAR(click_form, conv_form, 1e-9 * std::max(1.0, std::abs(click_form)));
}

TEST(ledger, enforces_budget_and_accumulates) {
  SimLedger ledger(1);
  ledger.rows[0].daily_budget = money_from_units(10.0);
  ledger.record_click(0, money_from_units(6.0));
  EXPECT_EQ(ledger.remaining_budget(0), money_from_units(4.0));
  EXPECT_THROW(ledger.record_click(0, money_from_units(5.0)), std::logic_error);
  // Cost never decreased by any path.
  EXPECT_EQ(ledger.rows[0].cost, money_from_units(6.0));
}

TEST(ground_truth, validates_traffic_mix) {
  auto m = generate_market(3, 5, 300);
  m.gt.traffic_mix[0] += 0.5;
  EXPECT_THROW(m.gt.validate(), std::invalid_argument);
}

TEST(money, formatting_and_parsing) {
  EXPECT_EQ(money_str(money_from_units(1.25)), "1.250000");
  EXPECT_EQ(money_str(money_from_units(-0.5)), "-0.500000");
  EXPECT_EQ(money_parse("2.5"), money_from_units(2.5));
}
