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
// Market core: domain types, the deterministic synthetic market generator,
// stochastic click/conversion sampling against ground truth, running ledgers
// and platform revenue.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adsmarket/material.hpp"
#include "adsmarket/money.hpp"
#include "adsmarket/rng.hpp"
#include "adsmarket/text.hpp"

namespace adsmarket {

inline constexpr int kNumBuckets = 8;  // time buckets per day
inline constexpr int kNumConversionTypes = 3;  // purchase, signup, call

enum class MatchType { kExact = 0, kPhrase, kBroad };

inline std::string_view match_type_name(MatchType m) {
  switch (m) {
    case MatchType::kExact: return "exact";
    case MatchType::kPhrase: return "phrase";
    default: return "broad";
  }
}

inline MatchType match_type_from_name(std::string_view s) {
  if (s == "exact") return MatchType::kExact;
  if (s == "phrase") return MatchType::kPhrase;
  if (s == "broad") return MatchType::kBroad;
  throw std::invalid_argument("unknown match type: " + std::string(s));
}

struct Keyword {
  int id = 0;
  std::vector<std::string> text;
  MatchType match_type = MatchType::kBroad;

  void validate() const {
    if (text.empty()) throw std::invalid_argument("keyword text empty");
  }
};

struct Ad {
  int id = 0;
  int advertiser_id = 0;
  std::vector<std::string> creative_text;
  std::vector<std::string> landing_terms;
  std::vector<Material> materials;

  void validate() const {
    if (creative_text.empty()) throw std::invalid_argument("ad creative text empty");
    for (const auto& m : materials) m.validate();
  }
};

struct AdvertiserProfile {
  int id = 0;
  int vertical = 0;
  std::vector<Keyword> keywords;
  std::vector<Ad> ads;
  Money daily_budget = 0;
  Money target_cpa = 0;
  double roi_floor = 0.0;  // gamma_i
  Money sale_value = 0;
  double sale_rate = 0.0;
  int conversion_type = 0;
  std::map<int, Money> manual_bids;  // keyword id -> static bid (baseline arm)

  /// ROI consistency: the declared target CPA never exceeds the value cap
  /// sale_value * sale_rate / (1 + gamma).
  bool target_cpa_consistent() const {
    const double cap = money_units(sale_value) * sale_rate / (1.0 + roi_floor);
    return money_units(target_cpa) <= cap + 1e-9;
  }

  void validate() const {
    if (daily_budget < 0) throw std::invalid_argument("negative budget");
    if (target_cpa <= 0) throw std::invalid_argument("target CPA must be positive");
    if (roi_floor < 0) throw std::invalid_argument("negative ROI floor");
    if (!target_cpa_consistent())
      throw std::invalid_argument("target CPA violates ROI cap");
    for (const auto& k : keywords) k.validate();
    for (const auto& a : ads) {
      a.validate();
      if (a.advertiser_id != id) throw std::invalid_argument("ad references wrong advertiser");
    }
  }
};

/// One entry of the finite query pool the generator ships; live queries are
/// pool entries instantiated with a user segment and time bucket.
struct QueryPattern {
  int id = 0;
  int vertical = 0;
  std::vector<std::string> text;
};

struct Query {
  int id = 0;  // query pool id
  std::vector<std::string> text;
  int user_segment = 0;
  int bucket = 0;

  void validate() const {
    if (bucket < 0 || bucket >= kNumBuckets) throw std::invalid_argument("bucket out of range");
  }
};

namespace detail {

/// |distinct(a) intersect distinct(b)| / |distinct(a)|.
inline double term_overlap(const std::vector<std::string>& a,
                           const std::vector<std::string>& b) {
  if (a.empty()) return 0.0;
  std::vector<std::string> da(a), db(b);
  std::sort(da.begin(), da.end());
  da.erase(std::unique(da.begin(), da.end()), da.end());
  std::sort(db.begin(), db.end());
  db.erase(std::unique(db.begin(), db.end()), db.end());
  size_t hits = 0;
  for (const auto& t : da)
    if (std::binary_search(db.begin(), db.end(), t)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(da.size());
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// The simulator oracle for true click/conversion probabilities. CTR is a
/// logistic in (query/creative term overlap, format quality, segment-vertical
/// affinity); CVR a logistic in (segment-vertical affinity, query/landing
/// overlap, conversion-type offset).
struct GroundTruth {
  double ctr_bias = -2.2;
  double ctr_overlap_w = 3.4;
  double ctr_quality_w = 1.1;
  double ctr_affinity_w = 0.5;
  double cvr_bias = -2.6;
  double cvr_affinity_w = 0.4;
  double cvr_overlap_w = 4.2;
  std::vector<double> conversion_type_offset;       // size kNumConversionTypes
  std::vector<double> component_ctr_bonus;          // size kNumComponentKinds
  std::vector<double> segment_vertical_affinity;    // [segment * n_verticals + vertical]
  std::vector<double> traffic_mix;                  // size kNumBuckets, sums to 1
  int n_verticals = 0;
  int n_segments = 0;

  double affinity(int segment, int vertical) const {
    return segment_vertical_affinity[static_cast<size_t>(segment) * n_verticals + vertical];
  }

  double format_quality(const ComponentCounts& counts) const {
    double q = 0.0;
    for (int k = 0; k < kNumComponentKinds; ++k) q += component_ctr_bonus[k] * counts[k];
    return q;
  }

  double ctr(const Query& q, const Ad& ad, int ad_vertical, const ComponentCounts& format) const {
    const double z = ctr_bias + ctr_overlap_w * detail::term_overlap(q.text, ad.creative_text) +
                     ctr_quality_w * format_quality(format) +
                     ctr_affinity_w * affinity(q.user_segment, ad_vertical);
    return detail::sigmoid(z);
  }

  double cvr(const Query& q, const Ad& ad, int ad_vertical, int conversion_type) const {
    if (conversion_type < 0 || conversion_type >= kNumConversionTypes)
      throw std::invalid_argument("unknown conversion type");
    const double z = cvr_bias + cvr_affinity_w * affinity(q.user_segment, ad_vertical) +
                     cvr_overlap_w * detail::term_overlap(q.text, ad.landing_terms) +
                     conversion_type_offset[conversion_type];
    return detail::sigmoid(z);
  }

  /// Ground-truth relevance in [0,1]: the ad-quality oracle behind the
  /// quality report metric. Quality is judged like a user would judge it:
  /// mostly by whether the landing page covers the search intent, then by
  /// the creative text and the category fit.
  double relevance(const Query& q, int query_vertical, const Ad& ad, int ad_vertical) const {
    const double r = 0.30 * detail::term_overlap(q.text, ad.creative_text) +
                     0.25 * (query_vertical == ad_vertical ? 1.0 : 0.0) +
                     0.45 * detail::term_overlap(q.text, ad.landing_terms);
    return std::clamp(r, 0.0, 1.0);
  }

  void validate() const {
    if (static_cast<int>(conversion_type_offset.size()) != kNumConversionTypes ||
        static_cast<int>(component_ctr_bonus.size()) != kNumComponentKinds)
      throw std::invalid_argument("ground truth parameter sizes wrong");
    if (static_cast<int>(traffic_mix.size()) != kNumBuckets)
      throw std::invalid_argument("traffic mix must have one weight per bucket");
    double total = 0.0;
    for (double w : traffic_mix) {
      if (w < 0.0) throw std::invalid_argument("negative traffic weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("traffic mix not normalized");
  }
};

// ---------------------------------------------------------------------------
// Generator

struct MarketGenParams {
  int n_verticals = 6;
  int n_segments = 6;
  int query_pool_size = 1300;
  int query_terms_lo = 2, query_terms_hi = 5;
  double query_anchor_frac = 0.7;  // share of pool queries built on an advertiser theme
  int keywords_lo = 2, keywords_hi = 4;
  double head_keyword_prob = 0.8;  // chance of also bidding a generic head term
  int cluster_size = 4;        // advertisers sharing a product theme
  int cluster_core_terms = 6;  // shared theme core; the rest is private
  int ads_lo = 1, ads_hi = 2;
  double sale_value_lo = 110.0, sale_value_hi = 160.0;  // money units
  double sale_rate_lo = 0.5, sale_rate_hi = 0.75;
  double gamma_lo = 0.5, gamma_hi = 0.9;
  double target_cpa_frac_lo = 0.85, target_cpa_frac_hi = 1.0;
  // Daily budget expressed as conversions the budget can buy at target CPA.
  double budget_conversions_lo = 80.0, budget_conversions_hi = 200.0;
  // Manual baseline bids: per-click value times lognormal noise. The default
  // mean sits above 1: hand-tuned bids without conversion tracking skew high.
  double manual_bid_log_mu = 0.55, manual_bid_log_sigma = 0.5;
  GroundTruth gt_template;  // logistic weights; tables are filled per market

  MarketGenParams() {
    gt_template.conversion_type_offset = {-0.2, 0.1, 0.0};
    gt_template.component_ctr_bonus = {0.0, 0.02, 0.18, 0.08, 0.08, 0.05, 0.05};
    gt_template.traffic_mix = {0.06, 0.10, 0.17, 0.12, 0.09, 0.15, 0.19, 0.12};
  }
};

struct MarketSpec {
  uint64_t seed = 0;
  int vocab_size = 0;
  std::vector<std::string> vocab;
  std::vector<AdvertiserProfile> advertisers;
  std::vector<QueryPattern> query_pool;
  GroundTruth gt;

  // Flat ad id -> (advertiser index, ad index); ad ids are dense and global.
  std::vector<std::pair<int, int>> ad_index;

  const Ad& ad(int ad_id) const {
    const auto& [ai, ji] = ad_index.at(static_cast<size_t>(ad_id));
    return advertisers[ai].ads[ji];
  }
  const AdvertiserProfile& owner(int ad_id) const {
    return advertisers[ad_index.at(static_cast<size_t>(ad_id)).first];
  }
  int total_ads() const { return static_cast<int>(ad_index.size()); }
  int total_keywords() const {
    int n = 0;
    for (const auto& a : advertisers) n += static_cast<int>(a.keywords.size());
    return n;
  }

  void rebuild_ad_index() {
    ad_index.clear();
    for (size_t i = 0; i < advertisers.size(); ++i)
      for (size_t j = 0; j < advertisers[i].ads.size(); ++j) {
        const int id = advertisers[i].ads[j].id;
        if (id != static_cast<int>(ad_index.size()))
          throw std::invalid_argument("ad ids must be dense and ordered");
        ad_index.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
  }
};

namespace detail {

inline std::vector<std::string> pick_terms(Rng& rng, const std::vector<std::string>& vocab,
                                           int vertical, int n_verticals, int count,
                                           double vertical_bias) {
  // Vocabulary layout: first 30% common terms, rest split into per-vertical
  // slices.
  const int n = static_cast<int>(vocab.size());
  const int common = std::max(1, n * 3 / 10);
  const int slice = std::max(1, (n - common) / n_verticals);
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    if (rng.uniform01() < vertical_bias) {
      const int base = common + vertical * slice;
      const int span = (vertical == n_verticals - 1) ? (n - base) : slice;
      out.push_back(vocab[static_cast<size_t>(base + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(std::max(1, span)))))]);
    } else {
      out.push_back(vocab[rng.uniform_int(static_cast<uint64_t>(common))]);
    }
  }
  return out;
}

}  // namespace detail

/// Deterministic synthetic market. Fixed (seed, n_advertisers, vocab_size,
/// params) produces an identical MarketSpec, so identical serialized bytes.
inline MarketSpec generate_market(uint64_t seed, int n_advertisers, int vocab_size,
                                  const MarketGenParams& params = {}) {
  if (n_advertisers < 1) throw std::invalid_argument("need at least one advertiser");
  if (vocab_size < 100) throw std::invalid_argument("vocab_size must be >= 100");

  Rng root(seed);
  Rng rng = root.fork(0xA11CE);

  MarketSpec m;
  m.seed = seed;
  m.vocab_size = vocab_size;
  m.gt = params.gt_template;
  m.gt.n_verticals = params.n_verticals;
  m.gt.n_segments = params.n_segments;

  const int common = std::max(1, vocab_size * 3 / 10);
  m.vocab.reserve(static_cast<size_t>(vocab_size));
  for (int i = 0; i < common; ++i) m.vocab.push_back("cw" + std::to_string(i));
  const int slice = std::max(1, (vocab_size - common) / params.n_verticals);
  for (int i = common; i < vocab_size; ++i) {
    const int v = std::min(params.n_verticals - 1, (i - common) / slice);
    m.vocab.push_back("v" + std::to_string(v) + "w" + std::to_string(i - common - v * slice));
  }

  m.gt.segment_vertical_affinity.resize(
      static_cast<size_t>(params.n_segments) * params.n_verticals);
  for (auto& a : m.gt.segment_vertical_affinity) a = rng.uniform(0.0, 1.0);
  m.gt.validate();

  // Advertisers come in clusters that sell the same kind of thing: a shared
  // theme core plus a few private terms. Head competition lives on the core.
  int next_keyword_id = 0;
  int next_ad_id = 0;
  std::set<int> head_keywords;
  std::vector<std::vector<std::string>> themes;
  themes.reserve(static_cast<size_t>(n_advertisers));
  std::vector<std::vector<std::string>> cluster_core;
  std::vector<int> cluster_vertical;
  {
    const int n_clusters =
        (n_advertisers + params.cluster_size - 1) / std::max(1, params.cluster_size);
    for (int c = 0; c < n_clusters; ++c) {
      const int vertical = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(params.n_verticals)));
      cluster_vertical.push_back(vertical);
      cluster_core.push_back(detail::pick_terms(rng, m.vocab, vertical, params.n_verticals,
                                                params.cluster_core_terms, 0.9));
    }
  }
  m.advertisers.reserve(static_cast<size_t>(n_advertisers));
  for (int i = 0; i < n_advertisers; ++i) {
    AdvertiserProfile adv;
    adv.id = i;
    const size_t cluster = static_cast<size_t>(i) / std::max(1, params.cluster_size);
    adv.vertical = cluster_vertical[cluster];
    adv.sale_value = money_from_units(rng.uniform(params.sale_value_lo, params.sale_value_hi));
    adv.sale_rate = rng.uniform(params.sale_rate_lo, params.sale_rate_hi);
    adv.roi_floor = rng.uniform(params.gamma_lo, params.gamma_hi);
    adv.conversion_type = static_cast<int>(rng.uniform_int(kNumConversionTypes));
    const double cap_units = money_units(adv.sale_value) * adv.sale_rate / (1.0 + adv.roi_floor);
    const double frac = rng.uniform(params.target_cpa_frac_lo, params.target_cpa_frac_hi);
    adv.target_cpa = std::min(money_from_units(cap_units), money_from_units(cap_units * frac));
    if (adv.target_cpa <= 0) adv.target_cpa = 1;
    adv.daily_budget = money_from_units(
        money_units(adv.target_cpa) *
        rng.uniform(params.budget_conversions_lo, params.budget_conversions_hi));

    // Theme: the cluster core plus private terms; feeds keywords, creatives
    // and landing pages.
    std::vector<std::string> theme = cluster_core[cluster];
    for (const auto& t : detail::pick_terms(rng, m.vocab, adv.vertical, params.n_verticals, 4, 0.85))
      theme.push_back(t);
    std::sort(theme.begin(), theme.end());
    theme.erase(std::unique(theme.begin(), theme.end()), theme.end());
    rng.shuffle(theme);
    themes.push_back(theme);
    auto theme_pick = [&](int count) {
      std::vector<std::string> t;
      for (int c = 0; c < count; ++c)
        t.push_back(theme[rng.uniform_int(theme.size())]);
      std::sort(t.begin(), t.end());
      t.erase(std::unique(t.begin(), t.end()), t.end());
      rng.shuffle(t);
      return t;
    };

    const int n_keywords = params.keywords_lo +
        static_cast<int>(rng.uniform_int(static_cast<uint64_t>(params.keywords_hi - params.keywords_lo + 1)));
    for (int k = 0; k < n_keywords; ++k) {
      Keyword kw;
      kw.id = next_keyword_id++;
      kw.text = theme_pick(1 + static_cast<int>(rng.uniform_int(2)));
      const double mt = rng.uniform01();
      kw.match_type = mt < 0.2 ? MatchType::kExact : (mt < 0.4 ? MatchType::kPhrase : MatchType::kBroad);
      adv.keywords.push_back(std::move(kw));
    }
    // Most accounts also bid a generic category-head term on broad match.
    if (rng.uniform01() < params.head_keyword_prob) {
      Keyword kw;
      kw.id = next_keyword_id++;
      head_keywords.insert(kw.id);
      const int common = std::max(1, vocab_size * 3 / 10);
      const int slice = std::max(1, (vocab_size - common) / params.n_verticals);
      const int base = common + adv.vertical * slice;
      kw.text = {m.vocab[static_cast<size_t>(base + static_cast<int>(rng.uniform_int(8)))]};
      kw.match_type = MatchType::kBroad;
      adv.keywords.push_back(std::move(kw));
    }

    const int n_ads = params.ads_lo +
        static_cast<int>(rng.uniform_int(static_cast<uint64_t>(params.ads_hi - params.ads_lo + 1)));
    for (int j = 0; j < n_ads; ++j) {
      Ad ad;
      ad.id = next_ad_id++;
      ad.advertiser_id = i;
      ad.creative_text = theme_pick(4 + static_cast<int>(rng.uniform_int(5)));
      ad.landing_terms = theme_pick(6 + static_cast<int>(rng.uniform_int(6)));
      for (const auto& extra :
           detail::pick_terms(rng, m.vocab, adv.vertical, params.n_verticals, 2, 0.2))
        ad.landing_terms.push_back(extra);

      Material title{MaterialKind::kTextTitle, join(ad.creative_text), 0, 0};
      Material desc{MaterialKind::kTextDescription, join(ad.landing_terms), 0, 0};
      ad.materials.push_back(title);
      ad.materials.push_back(desc);
      if (rng.uniform01() < 0.7) {
        Material img{MaterialKind::kImage, "img" + std::to_string(ad.id),
                     3 + static_cast<int>(rng.uniform_int(3)),
                     2 + static_cast<int>(rng.uniform_int(2))};
        ad.materials.push_back(img);
      }
      if (rng.uniform01() < 0.5)
        ad.materials.push_back(Material{MaterialKind::kPhone, "555" + std::to_string(1000 + ad.id), 0, 0});
      if (rng.uniform01() < 0.25)
        ad.materials.push_back(Material{MaterialKind::kAppPackage, "app.pkg" + std::to_string(ad.id), 0, 0});
      const int n_links = static_cast<int>(rng.uniform_int(3));
      for (int s = 0; s < n_links; ++s)
        ad.materials.push_back(Material{MaterialKind::kSitelink,
                                        "link " + theme[rng.uniform_int(theme.size())], 0, 0});
      adv.ads.push_back(std::move(ad));
    }
    m.advertisers.push_back(std::move(adv));
  }
  m.rebuild_ad_index();

  // Query pool. Commercial intent skews toward what advertisers sell, so
  // most patterns anchor on some advertiser's theme; the rest is generic
  // vertical text.
  m.query_pool.reserve(static_cast<size_t>(params.query_pool_size));
  for (int q = 0; q < params.query_pool_size; ++q) {
    QueryPattern qp;
    qp.id = q;
    const int len = params.query_terms_lo +
        static_cast<int>(rng.uniform_int(static_cast<uint64_t>(params.query_terms_hi - params.query_terms_lo + 1)));
    if (rng.uniform01() < params.query_anchor_frac) {
      const size_t anchor = rng.uniform_int(themes.size());
      qp.vertical = m.advertisers[anchor].vertical;
      const auto& theme = themes[anchor];
      const int n_theme = 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(std::min(3, len))));
      for (int t = 0; t < n_theme; ++t)
        qp.text.push_back(theme[rng.uniform_int(theme.size())]);
      for (const auto& extra : detail::pick_terms(rng, m.vocab, qp.vertical, params.n_verticals,
                                                  std::max(0, len - n_theme), 0.6))
        qp.text.push_back(extra);
      std::sort(qp.text.begin(), qp.text.end());
      qp.text.erase(std::unique(qp.text.begin(), qp.text.end()), qp.text.end());
      rng.shuffle(qp.text);
    } else {
      qp.vertical = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(params.n_verticals)));
      qp.text = detail::pick_terms(rng, m.vocab, qp.vertical, params.n_verticals, len, 0.7);
    }
    m.query_pool.push_back(std::move(qp));
  }

  // Manual baseline bids: one flat per-click value for the whole account,
  // estimated from the average conversion rate across the traffic their
  // keywords reach (keyword-level bids cannot see per-query conversion
  // value), with hand-tuning noise.
  for (auto& adv : m.advertisers) {
    std::vector<double> matched_cvrs;
    int cvr_n = 0;
    Query probe;
    for (const auto& qp : m.query_pool) {
      bool matched = false;
      for (const auto& kw : adv.keywords) {
        bool subset = !kw.text.empty();
        for (const auto& t : kw.text)
          if (std::find(qp.text.begin(), qp.text.end(), t) == qp.text.end()) {
            subset = false;
            break;
          }
        if (subset) {
          matched = true;
          break;
        }
      }
      if (!matched) continue;
      probe.id = qp.id;
      probe.text = qp.text;
      probe.user_segment = cvr_n % params.n_segments;
      probe.bucket = 0;
      matched_cvrs.push_back(m.gt.cvr(probe, adv.ads[0], adv.vertical, adv.conversion_type));
      if (++cvr_n >= 60) break;
    }
    // Hand-set values anchor on the keywords' best-performing traffic; the
    // average click value of the whole matched cluster is not visible to a
    // bidder without conversion tracking.
    double cvr_flat = 0.3;
    if (!matched_cvrs.empty()) {
      std::sort(matched_cvrs.begin(), matched_cvrs.end());
      const size_t lo = static_cast<size_t>(0.7 * static_cast<double>(matched_cvrs.size() - 1));
      double top_sum = 0.0;
      for (size_t i = lo; i < matched_cvrs.size(); ++i) top_sum += matched_cvrs[i];
      cvr_flat = top_sum / static_cast<double>(matched_cvrs.size() - lo);
    }
    for (const auto& kw : adv.keywords) {
      const double value = money_units(adv.target_cpa) * cvr_flat;
      const double noise = rng.lognormal(params.manual_bid_log_mu, params.manual_bid_log_sigma);
      // Head terms get pumped: generic keywords promise volume.
      const double head_boost = head_keywords.count(kw.id) ? 1.5 : 1.0;
      adv.manual_bids[kw.id] = std::max<Money>(1, money_from_units(value * noise * head_boost));
    }
    adv.validate();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Sampling against ground truth

inline bool sample_click(const GroundTruth& gt, const Query& q, const Ad& ad, int ad_vertical,
                         const ComponentCounts& format, Rng& rng) {
  return rng.bernoulli(gt.ctr(q, ad, ad_vertical, format));
}

/// Only meaningful after a click event; the caller owns that contract.
inline bool sample_conversion(const GroundTruth& gt, const Query& q, const Ad& ad,
                              int ad_vertical, int conversion_type, Rng& rng) {
  return rng.bernoulli(gt.cvr(q, ad, ad_vertical, conversion_type));
}

// ---------------------------------------------------------------------------
// Ledger

struct LedgerRow {
  int64_t impressions = 0;
  int64_t clicks = 0;
  int64_t conversions = 0;
  Money cost = 0;         // lifetime cost
  Money spent_today = 0;  // resets at day start
  Money daily_budget = 0;

  double ctr() const { return impressions > 0 ? static_cast<double>(clicks) / impressions : 0.0; }
  double cvr() const { return clicks > 0 ? static_cast<double>(conversions) / clicks : 0.0; }
  double cpc_units() const { return clicks > 0 ? money_units(cost) / clicks : 0.0; }
  double cpa_units() const {
    return conversions > 0 ? money_units(cost) / conversions : 0.0;
  }
};

/// Per-advertiser running accounts. Single-writer: only the simulation loop
/// mutates it.
struct SimLedger {
  std::vector<LedgerRow> rows;

  explicit SimLedger(size_t n_advertisers = 0) : rows(n_advertisers) {}

  void begin_day(const std::vector<AdvertiserProfile>& advertisers) {
    if (rows.size() < advertisers.size()) rows.resize(advertisers.size());
    for (const auto& a : advertisers) {
      rows[static_cast<size_t>(a.id)].spent_today = 0;
      rows[static_cast<size_t>(a.id)].daily_budget = a.daily_budget;
    }
  }

  Money remaining_budget(int advertiser_id) const {
    const auto& r = rows[static_cast<size_t>(advertiser_id)];
    return r.daily_budget - r.spent_today;
  }

  void record_impression(int advertiser_id) { rows[static_cast<size_t>(advertiser_id)].impressions++; }

  void record_click(int advertiser_id, Money cpc) {
    auto& r = rows[static_cast<size_t>(advertiser_id)];
    if (cpc < 0) throw std::invalid_argument("negative CPC");
    if (r.spent_today + cpc > r.daily_budget)
      throw std::logic_error("budget overrun: bid caps must prevent this");
    r.clicks++;
    r.cost += cpc;
    r.spent_today += cpc;
  }

  void record_conversion(int advertiser_id) { rows[static_cast<size_t>(advertiser_id)].conversions++; }
};

/// Platform revenue in the click form: sum over advertisers of
/// clicks_i * CPC_i, which telescopes to total cost. Exact in micro-units.
inline Money platform_revenue(const SimLedger& ledger) {
  Money total = 0;
  for (const auto& r : ledger.rows) total += r.cost;
  return total;
}

/// The conversion form: sum over advertisers of conversions_j * CPA_j.
/// Matches the click form whenever every advertiser with cost has
/// conversions.
inline double platform_revenue_by_conversions(const SimLedger& ledger) {
  double total = 0.0;
  for (const auto& r : ledger.rows)
    if (r.conversions > 0) total += static_cast<double>(r.conversions) * r.cpa_units();
  return total;
}

// ---------------------------------------------------------------------------
// Serialization: versioned structured text.

inline constexpr const char* kMarketFileHeader = "ADSMARKET_MARKET_V1";

namespace detail {

inline void write_terms(std::ostream& os, const std::vector<std::string>& terms) {
  os << terms.size();
  for (const auto& t : terms) os << ' ' << t;
}

inline std::vector<std::string> read_terms(std::istream& is) {
  size_t n = 0;
  is >> n;
  std::vector<std::string> out(n);
  for (auto& t : out) is >> t;
  return out;
}

inline void write_double(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

}  // namespace detail

inline void save_market(const MarketSpec& m, std::ostream& os) {
  os << kMarketFileHeader << "\n";
  os << "meta " << m.seed << ' ' << m.vocab_size << ' ' << m.gt.n_verticals << ' '
     << m.gt.n_segments << ' ' << m.advertisers.size() << ' ' << m.query_pool.size() << "\n";
  os << "gt";
  for (double v : {m.gt.ctr_bias, m.gt.ctr_overlap_w, m.gt.ctr_quality_w, m.gt.ctr_affinity_w,
                   m.gt.cvr_bias, m.gt.cvr_affinity_w, m.gt.cvr_overlap_w}) {
    os << ' ';
    detail::write_double(os, v);
  }
  os << "\n";
  auto dump_vec = [&os](const char* tag, const std::vector<double>& v) {
    os << tag << ' ' << v.size();
    for (double x : v) {
      os << ' ';
      detail::write_double(os, x);
    }
    os << "\n";
  };
  dump_vec("ctype_offsets", m.gt.conversion_type_offset);
  dump_vec("component_bonus", m.gt.component_ctr_bonus);
  dump_vec("affinity", m.gt.segment_vertical_affinity);
  dump_vec("traffic", m.gt.traffic_mix);
  os << "vocab " << m.vocab.size();
  for (const auto& w : m.vocab) os << ' ' << w;
  os << "\n";
  for (const auto& a : m.advertisers) {
    os << "advertiser " << a.id << ' ' << a.vertical << ' ' << a.daily_budget << ' '
       << a.target_cpa << ' ';
    detail::write_double(os, a.roi_floor);
    os << ' ' << a.sale_value << ' ';
    detail::write_double(os, a.sale_rate);
    os << ' ' << a.conversion_type << ' ' << a.keywords.size() << ' ' << a.ads.size() << "\n";
    for (const auto& k : a.keywords) {
      os << "keyword " << k.id << ' ' << match_type_name(k.match_type) << ' '
         << a.manual_bids.at(k.id) << ' ';
      detail::write_terms(os, k.text);
      os << "\n";
    }
    for (const auto& ad : a.ads) {
      os << "ad " << ad.id << ' ';
      detail::write_terms(os, ad.creative_text);
      os << ' ';
      detail::write_terms(os, ad.landing_terms);
      os << ' ' << ad.materials.size() << "\n";
      for (const auto& mat : ad.materials) {
        os << "material " << material_kind_name(mat.kind) << ' ' << mat.width << ' '
           << mat.height << ' ';
        std::string payload = mat.payload;
        for (auto& c : payload)
          if (c == ' ') c = '_';
        os << payload << "\n";
      }
    }
  }
  for (const auto& q : m.query_pool) {
    os << "query " << q.id << ' ' << q.vertical << ' ';
    detail::write_terms(os, q.text);
    os << "\n";
  }
}

inline MarketSpec load_market(std::istream& is) {
  std::string tag;
  is >> tag;
  if (tag != kMarketFileHeader) throw std::runtime_error("not a market file");
  MarketSpec m;
  size_t n_advertisers = 0, n_queries = 0;
  is >> tag >> m.seed >> m.vocab_size >> m.gt.n_verticals >> m.gt.n_segments >> n_advertisers >>
      n_queries;
  is >> tag >> m.gt.ctr_bias >> m.gt.ctr_overlap_w >> m.gt.ctr_quality_w >> m.gt.ctr_affinity_w >>
      m.gt.cvr_bias >> m.gt.cvr_affinity_w >> m.gt.cvr_overlap_w;
  auto load_vec = [&is, &tag](std::vector<double>& v) {
    size_t n = 0;
    is >> tag >> n;
    v.resize(n);
    for (auto& x : v) is >> x;
  };
  load_vec(m.gt.conversion_type_offset);
  load_vec(m.gt.component_ctr_bonus);
  load_vec(m.gt.segment_vertical_affinity);
  load_vec(m.gt.traffic_mix);
  size_t vocab_n = 0;
  is >> tag >> vocab_n;
  m.vocab.resize(vocab_n);
  for (auto& w : m.vocab) is >> w;

  m.advertisers.resize(n_advertisers);
  for (auto& a : m.advertisers) {
    size_t n_kw = 0, n_ads = 0;
    is >> tag >> a.id >> a.vertical >> a.daily_budget >> a.target_cpa >> a.roi_floor >>
        a.sale_value >> a.sale_rate >> a.conversion_type >> n_kw >> n_ads;
    a.keywords.resize(n_kw);
    for (auto& k : a.keywords) {
      std::string mt;
      Money bid = 0;
      is >> tag >> k.id >> mt >> bid;
      k.match_type = match_type_from_name(mt);
      k.text = detail::read_terms(is);
      a.manual_bids[k.id] = bid;
    }
    a.ads.resize(n_ads);
    for (auto& ad : a.ads) {
      size_t n_mat = 0;
      is >> tag >> ad.id;
      ad.advertiser_id = a.id;
      ad.creative_text = detail::read_terms(is);
      ad.landing_terms = detail::read_terms(is);
      is >> n_mat;
      ad.materials.resize(n_mat);
      for (auto& mat : ad.materials) {
        std::string kind, payload;
        is >> tag >> kind >> mat.width >> mat.height >> payload;
        for (auto& c : payload)
          if (c == '_') c = ' ';
        mat.kind = material_kind_from_name(kind);
        mat.payload = payload;
      }
    }
  }
  m.query_pool.resize(n_queries);
  for (auto& q : m.query_pool) {
    is >> tag >> q.id >> q.vertical;
    q.text = detail::read_terms(is);
  }
  m.gt.validate();
  m.rebuild_ad_index();
  for (const auto& a : m.advertisers) a.validate();
  return m;
}

inline std::string market_to_string(const MarketSpec& m) {
  std::ostringstream os;
  save_market(m, os);
  return os.str();
}

}  // namespace adsmarket
