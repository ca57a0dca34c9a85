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
// Experiment configuration: every seed, count, tolerance and knob the
// simulator consumes, with JSON round-trip. Keys absent from a file keep
// their defaults, so scenario configs only state what they change.

#include <string>
#include <vector>

#include <json.hpp>

#include "adsmarket/af_model.hpp"
#include "adsmarket/aggregator.hpp"
#include "adsmarket/alpha.hpp"
#include "adsmarket/auction.hpp"
#include "adsmarket/calibrator.hpp"
#include "adsmarket/inverted_index.hpp"
#include "adsmarket/market.hpp"
#include "adsmarket/pacing.hpp"
#include "adsmarket/response_model.hpp"
#include "adsmarket/skipgram.hpp"
#include "adsmarket/text.hpp"
#include "adsmarket/two_tower.hpp"

namespace adsmarket {

struct ModuleToggles {
  bool targeting = true;  // union retrieval vs keyword broad match only
  bool creation = true;   // format selection vs static default creative
  bool pacing = true;     // BF controller vs BF = 1
  bool alpha = true;      // RL factor vs 1.0
};

struct SimConfig {
  uint64_t seed = 42;

  // Market.
  int n_advertisers = 200;
  int vocab_size = 1000;
  MarketGenParams market;

  // Day structure.
  int days = 14;
  int warmup_days = 4;  // excluded from acceptance metrics
  int queries_per_day = 22000;
  int slots = 5;
  std::vector<double> position_decay = {1.0, 0.75, 0.55, 0.4, 0.3};

  // Retrieval.
  int k_each = 40;
  double relevance_floor = 0.25;
  Bm25Params bm25;
  int64_t min_support = 1;
  int pathsim_topk = 50;
  std::string pathsim_path = "clicks ~clicks clicks";
  std::vector<std::string> walk_paths = {"clicks ~clicks clicks", "matches belongs",
                                         "cooccurs clicks"};
  std::vector<std::string> aggregator_query_paths = {"clicks"};
  std::vector<std::string> aggregator_ad_paths = {"~clicks"};

  // Response model.
  FeatureConfig features;
  int response_dim = 16;
  ResponseTrainConfig response_train;
  size_t response_min_rows = 400;

  // Embeddings and semantic matcher.
  SkipgramConfig embed;
  int walks_per_node = 6;
  int walk_length = 24;
  int embed_train_day = 2;     // first day-end that trains node vectors/tower
  int embed_refresh_days = 4;  // retrain cadence afterwards
  TwoTowerConfig tower;
  AggregatorConfig aggregator;

  // Bid engine.
  AFConfig af;
  PacingConfig pacing;
  CalibratorConfig calibrator;
  double cf_min = 0.2, cf_max = 5.0;
  AlphaConfig alpha;
  bool alpha_shared = false;   // one policy per advertiser by default
  int alpha_explore_days = 4;  // epsilon-greedy while warming up

  // Auction.
  ReservePolicyConfig reserve;
  double quality_floor_pctr = 0.10;  // platform-side ad-rank gate, both arms
  double aiads_quality_floor = 0.10;  // the automated stack's own stricter bar
  // Legacy keyword reserve schedule (keyword-mediated entries only); the
  // target-CPA mechanism replaces these with CVR-personalized reserves.
  double keyword_reserve_lo = 0.0;
  double keyword_reserve_hi = 0.0;

  // Harness.
  ModuleToggles toggles;
  double ab_split = 0.75;  // manual share; the automated arm is the treated minority
  std::string run_dir;

  SimConfig() {
    embed.dim = 32;
    embed.epochs = 2;
    response_train.epochs = 3;
    tower.epochs = 3;
  }
};

inline nlohmann::ordered_json config_to_json(const SimConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["market"] = {{"n_advertisers", c.n_advertisers},
                 {"vocab_size", c.vocab_size},
                 {"n_verticals", c.market.n_verticals},
                 {"n_segments", c.market.n_segments},
                 {"query_pool_size", c.market.query_pool_size},
                 {"sale_value_lo", c.market.sale_value_lo},
                 {"sale_value_hi", c.market.sale_value_hi},
                 {"sale_rate_lo", c.market.sale_rate_lo},
                 {"sale_rate_hi", c.market.sale_rate_hi},
                 {"gamma_lo", c.market.gamma_lo},
                 {"gamma_hi", c.market.gamma_hi},
                 {"budget_conversions_lo", c.market.budget_conversions_lo},
                 {"budget_conversions_hi", c.market.budget_conversions_hi},
                 {"manual_bid_log_mu", c.market.manual_bid_log_mu},
                 {"manual_bid_log_sigma", c.market.manual_bid_log_sigma},
                 {"traffic_mix", c.market.gt_template.traffic_mix}};
  j["sim"] = {{"days", c.days},
              {"warmup_days", c.warmup_days},
              {"queries_per_day", c.queries_per_day},
              {"slots", c.slots},
              {"position_decay", c.position_decay}};
  j["retrieval"] = {{"k_each", c.k_each},
                    {"relevance_floor", c.relevance_floor},
                    {"bm25_k1", c.bm25.k1},
                    {"bm25_b", c.bm25.b},
                    {"min_support", c.min_support},
                    {"pathsim_topk", c.pathsim_topk},
                    {"pathsim_path", c.pathsim_path},
                    {"walk_paths", c.walk_paths},
                    {"aggregator_query_paths", c.aggregator_query_paths},
                    {"aggregator_ad_paths", c.aggregator_ad_paths}};
  j["response"] = {{"hash_bits", c.features.hash_bits},
                   {"dim", c.response_dim},
                   {"epochs", c.response_train.epochs},
                   {"lr", c.response_train.lr},
                   {"ctr_weight", c.response_train.ctr_weight},
                   {"cvr_weight", c.response_train.cvr_weight},
                   {"min_rows", c.response_min_rows}};
  j["embed"] = {{"dim", c.embed.dim},
                {"window", c.embed.window},
                {"negatives", c.embed.negatives},
                {"epochs", c.embed.epochs},
                {"lr", c.embed.lr},
                {"neg_exponent", c.embed.neg_exponent},
                {"walks_per_node", c.walks_per_node},
                {"walk_length", c.walk_length},
                {"train_day", c.embed_train_day},
                {"refresh_days", c.embed_refresh_days}};
  j["tower"] = {{"proj_dim", c.tower.proj_dim},
                {"epochs", c.tower.epochs},
                {"lr", c.tower.lr},
                {"negatives", c.tower.negatives},
                {"temperature", c.tower.temperature}};
  j["bid"] = {{"af_prior", c.af.prior},
              {"af_shrinkage", c.af.shrinkage},
              {"af_max", c.af.max_factor},
              {"af_bucket_bins", c.af.bucket_bins},
              {"af_daily_decay", c.af.daily_decay},
              {"bf_gain", c.pacing.gain},
              {"bf_min", c.pacing.bf_min},
              {"bf_max", c.pacing.bf_max},
              {"cf_min_pairs", c.calibrator.min_pairs},
              {"cf_max_bins", c.calibrator.max_bins},
              {"cf_factor_min", c.cf_min},
              {"cf_factor_max", c.cf_max},
              {"alpha_lr", c.alpha.lr},
              {"alpha_discount", c.alpha.discount},
              {"alpha_epsilon", c.alpha.epsilon},
              {"alpha_shared", c.alpha_shared},
              {"alpha_explore_days", c.alpha_explore_days}};
  j["auction"] = {{"quality_floor_pctr", c.quality_floor_pctr},
                  {"aiads_quality_floor", c.aiads_quality_floor},
                  {"keyword_reserve_lo", c.keyword_reserve_lo},
                  {"keyword_reserve_hi", c.keyword_reserve_hi},
                  {"base_reserve", money_units(c.reserve.base_reserve)},
                  {"reserve_mult_floor", c.reserve.mult_floor},
                  {"reserve_mult_ceil", c.reserve.mult_ceil},
                  {"bank_gain", c.reserve.bank_gain},
                  {"bank_scale", c.reserve.bank_scale_units},
                  {"bank_lo", c.reserve.bank_lo},
                  {"bank_hi", c.reserve.bank_hi}};
  j["toggles"] = {{"targeting", c.toggles.targeting},
                  {"creation", c.toggles.creation},
                  {"pacing", c.toggles.pacing},
                  {"alpha", c.toggles.alpha}};
  j["ab_split"] = c.ab_split;
  return j;
}

inline SimConfig config_from_json(const nlohmann::json& j) {
  SimConfig c;
  auto get = [](const nlohmann::json& obj, const char* key, auto fallback) {
    using T = decltype(fallback);
    return obj.contains(key) ? obj.at(key).get<T>() : fallback;
  };
  c.seed = get(j, "seed", c.seed);
  if (j.contains("market")) {
    const auto& m = j.at("market");
    c.n_advertisers = get(m, "n_advertisers", c.n_advertisers);
    c.vocab_size = get(m, "vocab_size", c.vocab_size);
    c.market.n_verticals = get(m, "n_verticals", c.market.n_verticals);
    c.market.n_segments = get(m, "n_segments", c.market.n_segments);
    c.market.query_pool_size = get(m, "query_pool_size", c.market.query_pool_size);
    c.market.sale_value_lo = get(m, "sale_value_lo", c.market.sale_value_lo);
    c.market.sale_value_hi = get(m, "sale_value_hi", c.market.sale_value_hi);
    c.market.sale_rate_lo = get(m, "sale_rate_lo", c.market.sale_rate_lo);
    c.market.sale_rate_hi = get(m, "sale_rate_hi", c.market.sale_rate_hi);
    c.market.gamma_lo = get(m, "gamma_lo", c.market.gamma_lo);
    c.market.gamma_hi = get(m, "gamma_hi", c.market.gamma_hi);
    c.market.budget_conversions_lo = get(m, "budget_conversions_lo", c.market.budget_conversions_lo);
    c.market.budget_conversions_hi = get(m, "budget_conversions_hi", c.market.budget_conversions_hi);
    c.market.manual_bid_log_mu = get(m, "manual_bid_log_mu", c.market.manual_bid_log_mu);
    c.market.manual_bid_log_sigma = get(m, "manual_bid_log_sigma", c.market.manual_bid_log_sigma);
    c.market.gt_template.traffic_mix =
        get(m, "traffic_mix", c.market.gt_template.traffic_mix);
  }
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    c.days = get(s, "days", c.days);
    c.warmup_days = get(s, "warmup_days", c.warmup_days);
    c.queries_per_day = get(s, "queries_per_day", c.queries_per_day);
    c.slots = get(s, "slots", c.slots);
    c.position_decay = get(s, "position_decay", c.position_decay);
  }
  if (j.contains("retrieval")) {
    const auto& r = j.at("retrieval");
    c.k_each = get(r, "k_each", c.k_each);
    c.relevance_floor = get(r, "relevance_floor", c.relevance_floor);
    c.bm25.k1 = get(r, "bm25_k1", c.bm25.k1);
    c.bm25.b = get(r, "bm25_b", c.bm25.b);
    c.min_support = get(r, "min_support", c.min_support);
    c.pathsim_topk = get(r, "pathsim_topk", c.pathsim_topk);
    c.pathsim_path = get(r, "pathsim_path", c.pathsim_path);
    c.walk_paths = get(r, "walk_paths", c.walk_paths);
    c.aggregator_query_paths = get(r, "aggregator_query_paths", c.aggregator_query_paths);
    c.aggregator_ad_paths = get(r, "aggregator_ad_paths", c.aggregator_ad_paths);
  }
  if (j.contains("response")) {
    const auto& r = j.at("response");
    c.features.hash_bits = get(r, "hash_bits", c.features.hash_bits);
    c.response_dim = get(r, "dim", c.response_dim);
    c.response_train.epochs = get(r, "epochs", c.response_train.epochs);
    c.response_train.lr = get(r, "lr", c.response_train.lr);
    c.response_train.ctr_weight = get(r, "ctr_weight", c.response_train.ctr_weight);
    c.response_train.cvr_weight = get(r, "cvr_weight", c.response_train.cvr_weight);
    c.response_min_rows = get(r, "min_rows", c.response_min_rows);
  }
  if (j.contains("embed")) {
    const auto& e = j.at("embed");
    c.embed.dim = get(e, "dim", c.embed.dim);
    c.embed.window = get(e, "window", c.embed.window);
    c.embed.negatives = get(e, "negatives", c.embed.negatives);
    c.embed.epochs = get(e, "epochs", c.embed.epochs);
    c.embed.lr = get(e, "lr", c.embed.lr);
    c.embed.neg_exponent = get(e, "neg_exponent", c.embed.neg_exponent);
    c.walks_per_node = get(e, "walks_per_node", c.walks_per_node);
    c.walk_length = get(e, "walk_length", c.walk_length);
    c.embed_train_day = get(e, "train_day", c.embed_train_day);
    c.embed_refresh_days = get(e, "refresh_days", c.embed_refresh_days);
  }
  if (j.contains("tower")) {
    const auto& t = j.at("tower");
    c.tower.proj_dim = get(t, "proj_dim", c.tower.proj_dim);
    c.tower.epochs = get(t, "epochs", c.tower.epochs);
    c.tower.lr = get(t, "lr", c.tower.lr);
    c.tower.negatives = get(t, "negatives", c.tower.negatives);
    c.tower.temperature = get(t, "temperature", c.tower.temperature);
  }
  if (j.contains("bid")) {
    const auto& b = j.at("bid");
    c.af.prior = get(b, "af_prior", c.af.prior);
    c.af.shrinkage = get(b, "af_shrinkage", c.af.shrinkage);
    c.af.max_factor = get(b, "af_max", c.af.max_factor);
    c.af.bucket_bins = get(b, "af_bucket_bins", c.af.bucket_bins);
    c.af.daily_decay = get(b, "af_daily_decay", c.af.daily_decay);
    c.pacing.gain = get(b, "bf_gain", c.pacing.gain);
    c.pacing.bf_min = get(b, "bf_min", c.pacing.bf_min);
    c.pacing.bf_max = get(b, "bf_max", c.pacing.bf_max);
    c.calibrator.min_pairs = get(b, "cf_min_pairs", c.calibrator.min_pairs);
    c.calibrator.max_bins = get(b, "cf_max_bins", c.calibrator.max_bins);
    c.cf_min = get(b, "cf_factor_min", c.cf_min);
    c.cf_max = get(b, "cf_factor_max", c.cf_max);
    c.alpha.lr = get(b, "alpha_lr", c.alpha.lr);
    c.alpha.discount = get(b, "alpha_discount", c.alpha.discount);
    c.alpha.epsilon = get(b, "alpha_epsilon", c.alpha.epsilon);
    c.alpha_shared = get(b, "alpha_shared", c.alpha_shared);
    c.alpha_explore_days = get(b, "alpha_explore_days", c.alpha_explore_days);
  }
  if (j.contains("auction")) {
    const auto& a = j.at("auction");
    c.quality_floor_pctr = get(a, "quality_floor_pctr", c.quality_floor_pctr);
    c.aiads_quality_floor = get(a, "aiads_quality_floor", c.aiads_quality_floor);
    c.keyword_reserve_lo = get(a, "keyword_reserve_lo", c.keyword_reserve_lo);
    c.keyword_reserve_hi = get(a, "keyword_reserve_hi", c.keyword_reserve_hi);
    c.reserve.base_reserve = money_from_units(get(a, "base_reserve", money_units(c.reserve.base_reserve)));
    c.reserve.mult_floor = get(a, "reserve_mult_floor", c.reserve.mult_floor);
    c.reserve.mult_ceil = get(a, "reserve_mult_ceil", c.reserve.mult_ceil);
    c.reserve.bank_gain = get(a, "bank_gain", c.reserve.bank_gain);
    c.reserve.bank_scale_units = get(a, "bank_scale", c.reserve.bank_scale_units);
    c.reserve.bank_lo = get(a, "bank_lo", c.reserve.bank_lo);
    c.reserve.bank_hi = get(a, "bank_hi", c.reserve.bank_hi);
  }
  if (j.contains("toggles")) {
    const auto& t = j.at("toggles");
    c.toggles.targeting = get(t, "targeting", c.toggles.targeting);
    c.toggles.creation = get(t, "creation", c.toggles.creation);
    c.toggles.pacing = get(t, "pacing", c.toggles.pacing);
    c.toggles.alpha = get(t, "alpha", c.toggles.alpha);
  }
  c.ab_split = get(j, "ab_split", c.ab_split);
  return c;
}

inline uint64_t config_hash(const SimConfig& c) { return fnv1a64(config_to_json(c).dump()); }

/// The offline A/B scenario: a manual-majority market where the automated
/// stack is the treated minority, with the stricter self-imposed quality bar
/// and a fuller reserve schedule.
inline SimConfig ab_scenario_config() {
  SimConfig c;
  c.n_advertisers = 120;
  c.vocab_size = 1200;
  c.market.query_pool_size = 900;
  c.days = 10;
  c.warmup_days = 4;
  c.queries_per_day = 8000;
  c.ab_split = 0.75;
  c.quality_floor_pctr = 0.10;
  c.aiads_quality_floor = 0.34;
  c.reserve.base_reserve = money_from_units(4.0);
  c.keyword_reserve_lo = 8.0;
  c.keyword_reserve_hi = 16.0;
  c.market.manual_bid_log_mu = 0.75;
  c.market.manual_bid_log_sigma = 0.45;
  return c;
}

/// Budget-constrained pacing scenario: tight budgets over a peaked traffic
/// curve; measured against the pacing-off ablation.
inline SimConfig pacing_scenario_config() {
  SimConfig c;
  c.n_advertisers = 60;
  c.vocab_size = 1000;
  c.market.query_pool_size = 700;
  c.days = 6;
  c.warmup_days = 2;
  c.queries_per_day = 7000;
  c.market.budget_conversions_lo = 3.0;
  c.market.budget_conversions_hi = 6.0;
  c.pacing.gain = 8.0;
  c.queries_per_day = 9000;
  return c;
}

}  // namespace adsmarket
