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
// Orchestration: the daily loop over eight time buckets, the manual keyword
// arm and the automated arm competing in the same auctions over a common
// query stream, model refresh between buckets and days, metrics and logs.
// A (config, seed) pair replays byte-identically.

#include <array>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adsmarket/af_model.hpp"
#include "adsmarket/alpha.hpp"
#include "adsmarket/auction.hpp"
#include "adsmarket/bid_engine.hpp"
#include "adsmarket/calibrator.hpp"
#include "adsmarket/config.hpp"
#include "adsmarket/creation.hpp"
#include "adsmarket/documents.hpp"
#include "adsmarket/hetgraph.hpp"
#include "adsmarket/inverted_index.hpp"
#include "adsmarket/knn.hpp"
#include "adsmarket/market.hpp"
#include "adsmarket/pacing.hpp"
#include "adsmarket/pathsim.hpp"
#include "adsmarket/response_model.hpp"
#include "adsmarket/skipgram.hpp"
#include "adsmarket/targeting.hpp"
#include "adsmarket/two_tower.hpp"
#include "adsmarket/walks.hpp"

namespace adsmarket {

enum class Arm { kManual = 0, kAiads };

inline std::string_view arm_name(Arm a) { return a == Arm::kManual ? "manual" : "aiads"; }

struct AdvertiserDayStats {
  std::array<Money, kNumBuckets> bucket_spend{};
  Money cost = 0;
  int64_t impressions = 0, clicks = 0, conversions = 0;
};

struct ArmDayTotals {
  Money cost = 0;
  int64_t impressions = 0, clicks = 0, conversions = 0;
  double relevance_sum = 0.0;
};

struct BidDiagnostics {
  double sum_cvr_cal = 0.0;
  double sum_converted = 0.0;
  double sum_bid_units = 0.0;
  double sum_cpc_units = 0.0;
  double sum_af = 0.0;
  double sum_alpha = 0.0;
  double sum_bf = 0.0;
  int64_t clicked = 0;

  double mean_cvr_cal() const { return clicked ? sum_cvr_cal / clicked : 0.0; }
  double realized_cvr() const { return clicked ? sum_converted / clicked : 0.0; }
  double mean_ratio() const { return sum_cpc_units > 0 ? sum_bid_units / sum_cpc_units : 0.0; }
  double mean_af() const { return clicked ? sum_af / clicked : 0.0; }
  double mean_alpha() const { return clicked ? sum_alpha / clicked : 0.0; }
  double mean_bf() const { return clicked ? sum_bf / clicked : 0.0; }
};

struct AdvertiserDiag {
  double sum_cvr_cal = 0.0;
  double sum_converted = 0.0;
  double sum_bid_units = 0.0;
  double sum_cpc_units = 0.0;
  int64_t clicked = 0;
};

struct RunStats {
  std::vector<Arm> arms;                                  // by advertiser
  std::vector<std::vector<AdvertiserDayStats>> days;      // [day][advertiser]
  std::vector<std::array<ArmDayTotals, 2>> arm_days;      // [day][arm]
  std::vector<uint64_t> query_checksums;                  // per day
  int64_t auctions = 0;
  SimLedger ledger{0};
};

/// Hook for invariant audits; sees every auction right after pricing.
using AuctionObserver =
    std::function<void(const AuctionRequest&, const AuctionOutcome&, const SimLedger&)>;

class Simulation {
 public:
  Simulation(const MarketSpec& market, const SimConfig& cfg, std::vector<Arm> arms,
             AuctionObserver observer = nullptr)
      : market_(market),
        cfg_(cfg),
        arms_(std::move(arms)),
        root_(cfg.seed),
        ledger_(market.advertisers.size()),
        response_(cfg.features, cfg.response_dim, {0, 1, 2}),
        af_stats_(cfg.af),
        accounts_(market.advertisers.size()),
        cvr_track_(market.advertisers.size()),
        adv_diag_(market.advertisers.size()),
        observer_(std::move(observer)) {
    if (arms_.size() != market_.advertisers.size())
      throw std::invalid_argument("arm assignment must cover every advertiser");
    if (static_cast<int>(cfg_.position_decay.size()) < cfg_.slots)
      throw std::invalid_argument("position decay vector shorter than slot count");

    pacing_state_.cfg = cfg_.pacing;
    for (int b = 0; b < kNumBuckets; ++b)
      pacing_state_.planned[static_cast<size_t>(b)] = market_.gt.traffic_mix[static_cast<size_t>(b)];
    pacing_state_.validate();

    af_model_ = AFModel::fit(af_stats_);
    const size_t n = market_.advertisers.size();
    alpha_.assign(cfg_.alpha_shared ? 1 : n, AlphaPolicy(cfg_.alpha));
    alpha_rt_.assign(n, {});

    // Term vectors train once up front from market text; they gate the
    // tower and aggregator, while node vectors wait for click data.
    {
      std::vector<std::vector<std::string>> docs;
      for (const auto& qp : market_.query_pool) docs.push_back(qp.text);
      for (int ad = 0; ad < market_.total_ads(); ++ad) {
        const Ad& a = market_.ad(ad);
        std::vector<std::string> d(a.creative_text);
        d.insert(d.end(), a.landing_terms.begin(), a.landing_terms.end());
        docs.push_back(std::move(d));
      }
      SkipgramConfig term_cfg = cfg_.embed;
      term_cfg.epochs = 1;
      Rng term_rng = root_.fork(0x7e12);
      train_term_embeddings(embed_table_, docs, term_cfg, term_rng);
    }
    tower_ = TwoTowerModel(cfg_.embed.dim, cfg_.tower);

    if (cfg_.toggles.creation) build_ad_formats();
    rebuild_documents();

    stats_.arms = arms_;
    if (!cfg_.run_dir.empty()) open_run_dir();
  }

  const RunStats& stats() const { return stats_; }
  const BidDiagnostics& diagnostics() const { return diag_; }
  BidDiagnostics& diagnostics_mut() { return diag_; }
  const std::vector<AdvertiserDiag>& advertiser_diagnostics() const { return adv_diag_; }
  void reset_advertiser_diagnostics() { adv_diag_.assign(market_.advertisers.size(), {}); }
  const MarketSpec& market() const { return market_; }
  const ResponseModel& response_model() const { return response_; }
  const Calibrator& calibrator() const { return calibrator_; }

  void run() {
    for (int day = 0; day < cfg_.days; ++day) run_day(day);
    finalize_outputs();
  }

  /// One simulated day: queries drawn per traffic mix, processed bucket by
  /// bucket through retrieve -> bid -> auction -> render -> sample ->
  /// ledger/pacing/account/Alpha updates, then the between-day refresh.
  void run_day(int day) {
    ledger_.begin_day(market_.advertisers);
    format_cache_.assign(
        static_cast<size_t>(market_.total_ads()) * static_cast<size_t>(market_.gt.n_segments), {});
    stats_.days.emplace_back(market_.advertisers.size());
    stats_.arm_days.push_back({});

    Rng day_rng = root_.fork(0xD0 + static_cast<uint64_t>(day));
    Rng q_rng = day_rng.fork(1);
    Rng click_rng = day_rng.fork(2);
    Rng conv_rng = day_rng.fork(3);
    Rng alpha_rng = day_rng.fork(4);

    // Arrival stream: (pattern, segment, bucket); bucket-major processing
    // preserves draw order inside each bucket.
    struct Arrival {
      int pattern, segment, bucket;
    };
    std::vector<Arrival> arrivals;
    arrivals.reserve(static_cast<size_t>(cfg_.queries_per_day));
    uint64_t checksum = 0xcbf29ce484222325ULL;
    for (int i = 0; i < cfg_.queries_per_day; ++i) {
      Arrival a;
      a.pattern = static_cast<int>(q_rng.uniform_int(market_.query_pool.size()));
      a.segment = static_cast<int>(q_rng.uniform_int(static_cast<uint64_t>(market_.gt.n_segments)));
      a.bucket = static_cast<int>(q_rng.discrete(market_.gt.traffic_mix));
      checksum = fnv1a64_mix(static_cast<uint64_t>(a.pattern) << 32 |
                                 static_cast<uint64_t>(a.segment) << 8 |
                                 static_cast<uint64_t>(a.bucket),
                             checksum);
      arrivals.push_back(a);
    }
    stats_.query_checksums.push_back(checksum);

    std::array<std::vector<const Arrival*>, kNumBuckets> per_bucket;
    for (const auto& a : arrivals) per_bucket[static_cast<size_t>(a.bucket)].push_back(&a);

    for (int b = 0; b < kNumBuckets; ++b) {
      // Immutable factor-model snapshots for this bucket.
      af_model_ = AFModel::fit(af_stats_);
      refit_calibrator();
      begin_bucket_alpha(day, b, alpha_rng);

      const auto& bucket_list = per_bucket[static_cast<size_t>(b)];
      for (size_t i = 0; i < bucket_list.size(); ++i) {
        Query q;
        q.id = bucket_list[i]->pattern;
        q.text = market_.query_pool[static_cast<size_t>(q.id)].text;
        q.user_segment = bucket_list[i]->segment;
        q.bucket = b;
        const double elapsed =
            static_cast<double>(i) / static_cast<double>(std::max<size_t>(1, bucket_list.size()));
        process_query(day, b, elapsed, q, click_rng, conv_rng);
      }
      end_bucket_alpha(day, b);
    }
    end_of_day(day);
  }

  /// Mean ground-truth relevance of displayed ads for one arm over a day
  /// range; in [0,1].
  double relevance_proxy(Arm arm, int from_day, int to_day) const {
    double rel = 0.0;
    int64_t n = 0;
    for (int d = from_day; d < to_day && d < static_cast<int>(stats_.arm_days.size()); ++d) {
      rel += stats_.arm_days[static_cast<size_t>(d)][static_cast<size_t>(arm)].relevance_sum;
      n += stats_.arm_days[static_cast<size_t>(d)][static_cast<size_t>(arm)].impressions;
    }
    return n > 0 ? rel / static_cast<double>(n) : 0.0;
  }

 private:
  struct EntryContext {
    int ad_id = 0;
    int advertiser_id = 0;
    Arm arm = Arm::kManual;
    FeatureVector fv;
    ComponentCounts format{};
    double pcvr_raw = 0.0;
    double cvr_cal = 0.0;
    double af = 1.0, bf = 1.0, alpha = 1.0;
    int matched_keyword = -1;
    Money bid = 0;
  };

  void build_ad_formats() {
    ad_formats_.resize(static_cast<size_t>(market_.total_ads()));
    constexpr int kCanvasW = 10, kCanvasH = 9;
    for (int ad_id = 0; ad_id < market_.total_ads(); ++ad_id) {
      const Ad& ad = market_.ad(ad_id);
      const auto comps = componentize(ad.materials);
      try {
        const auto templates = generate_templates(kCanvasW, kCanvasH, comps, 4);
        ad_formats_[static_cast<size_t>(ad_id)] = enumerate_formats(templates, comps, 6);
      } catch (const std::invalid_argument&) {
        // No viable layout; the ad renders in the default format.
      }
    }
  }

  void rebuild_documents() {
    std::vector<DocClickEvent> events;
    events.reserve(click_counts_.size());
    for (const auto& [key, n] : click_counts_) {
      const auto kw = click_keyword_.find(key);
      events.push_back({key.first, key.second, kw == click_keyword_.end() ? -1 : kw->second, n});
    }
    DocumentBuildParams p;
    p.min_support = cfg_.min_support;
    docs_ = build_documents(events, market_, p);
    index_ = InvertedIndex(docs_.ads, cfg_.bm25);
    targeting_.emplace(market_, &docs_, &index_, &tower_, &embed_table_,
                       ad_knn_.size() ? &ad_knn_ : nullptr,
                       pathsim_index_.empty() ? nullptr : &pathsim_index_);
  }

  HetGraph build_market_graph() const {
    std::vector<QueryRecord> queries;
    for (const auto& qp : market_.query_pool) queries.push_back({qp.id, qp.text});
    std::vector<KeywordRecord> keywords;
    for (const auto& adv : market_.advertisers)
      for (const auto& kw : adv.keywords) keywords.push_back({kw.id, adv.id, kw.text});
    std::sort(keywords.begin(), keywords.end(),
              [](const KeywordRecord& a, const KeywordRecord& b) { return a.id < b.id; });
    std::vector<AdRecord> ads;
    for (int ad = 0; ad < market_.total_ads(); ++ad) ads.push_back({ad, market_.ad(ad).advertiser_id});
    std::vector<ClickLogEntry> log;
    log.reserve(click_counts_.size());
    for (const auto& [key, n] : click_counts_) log.push_back({key.first, key.second, n});
    GraphBuildParams p;
    p.min_support = cfg_.min_support;
    return build_graph(log, queries, keywords, ads, static_cast<int>(market_.advertisers.size()), p);
  }

  void refresh_embeddings(int day) {
    if (click_counts_.empty()) return;
    const HetGraph g = build_market_graph();

    // PathSim node index over the configured symmetric path.
    pathsim_index_.clear();
    const MetaPath ps_path = MetaPath::parse(cfg_.pathsim_path);
    PathSimIndex ps(g, ps_path);
    for (size_t qid = 0; qid < market_.query_pool.size(); ++qid) {
      auto entries = ps.topk(static_cast<int>(qid), cfg_.pathsim_topk);
      if (!entries.empty()) pathsim_index_[static_cast<int>(qid)] = std::move(entries);
    }

    // Node vectors from meta-path walks.
    Rng walk_rng = root_.fork(0x3A17 + static_cast<uint64_t>(day));
    std::vector<std::vector<NodeRef>> corpus;
    for (const auto& spec : cfg_.walk_paths) {
      auto walks = metapath_walks(g, MetaPath::parse(spec), cfg_.walks_per_node, cfg_.walk_length,
                                  walk_rng);
      for (auto& w : walks) corpus.push_back(std::move(w));
    }
    std::array<int, kNumNodeTypes> counts{};
    for (int t = 0; t < kNumNodeTypes; ++t) counts[static_cast<size_t>(t)] = g.node_count(static_cast<NodeType>(t));
    Rng sg_rng = root_.fork(0x5917 + static_cast<uint64_t>(day));
    auto term_vocab = std::move(embed_table_.term_vocab);
    auto term_index = std::move(embed_table_.term_index);
    auto term_vecs = std::move(embed_table_.term_vecs);
    embed_table_ = train_skipgram(corpus, counts, cfg_.embed, sg_rng);
    embed_table_.term_vocab = std::move(term_vocab);
    embed_table_.term_index = std::move(term_index);
    embed_table_.term_vecs = std::move(term_vecs);

    // Two-tower matcher on click-through pairs, then the ad-side ANN index.
    std::vector<std::pair<const QueryDocument*, const AdDocument*>> pairs;
    for (const auto& [key, n] : click_counts_) {
      if (n < cfg_.min_support) continue;
      pairs.push_back({&docs_.queries[static_cast<size_t>(key.first)],
                       &docs_.ads[static_cast<size_t>(key.second)]});
    }
    std::vector<const AdDocument*> pool;
    for (const auto& d : docs_.ads) pool.push_back(&d);
    if (!pairs.empty()) {
      Rng tower_rng = root_.fork(0x70E3 + static_cast<uint64_t>(day));
      tower_.train(pairs, pool, embed_table_, tower_rng);
      std::vector<int> ids;
      std::vector<std::vector<double>> vecs;
      for (const auto& d : docs_.ads) {
        ids.push_back(d.ad_id);
        vecs.push_back(tower_.encode_ad(d.terms(), embed_table_));
      }
      ad_knn_ = KnnIndex(std::move(ids), std::move(vecs), KnnIndex::Mode::kExact);
    }
    embeddings_ready_ = true;
  }

  void refit_calibrator() {
    // Pairs are re-scored with the current model so the isotonic map never
    // calibrates yesterday's score distribution.
    std::vector<std::pair<double, bool>> pairs;
    auto add = [&](const CfSample& s) {
      pairs.push_back({response_.predict_cvr(s.fv, s.conversion_type), s.converted});
    };
    for (const auto& day_samples : cf_window_)
      for (const auto& s : day_samples) add(s);
    for (const auto& s : cf_today_) add(s);
    calibrator_ = fit_calibrator(pairs, cfg_.calibrator);
  }

  // -- Alpha bookkeeping ------------------------------------------------------

  struct AlphaRuntime {
    bool active = false;
    AlphaState state;
    int action = kAlphaNeutralAction;
    double factor = 1.0;
    double prev_pcvr_mean = 0.0, prev_cpc_mean = 0.0;
    double bucket_pcvr_sum = 0.0;
    int64_t bucket_impressions = 0;
    Money bucket_cpc_sum = 0;
    int64_t bucket_clicks = 0;
    Money day_cost = 0;
    int64_t day_conversions = 0;
  };

  AlphaPolicy& policy_for(int advertiser) {
    return alpha_[cfg_.alpha_shared ? 0 : static_cast<size_t>(advertiser)];
  }

  AlphaState alpha_state_of(int advertiser, int bucket) const {
    const auto& rt = alpha_rt_[static_cast<size_t>(advertiser)];
    const auto& adv = market_.advertisers[static_cast<size_t>(advertiser)];
    const auto& row = ledger_.rows[static_cast<size_t>(advertiser)];
    const double spent_ratio =
        row.daily_budget > 0 ? money_units(row.spent_today) / money_units(row.daily_budget) : 0.0;
    const double cur_pcvr = rt.bucket_impressions > 0
                                ? rt.bucket_pcvr_sum / static_cast<double>(rt.bucket_impressions)
                                : rt.prev_pcvr_mean;
    const double cur_cpc =
        rt.bucket_clicks > 0 ? money_units(rt.bucket_cpc_sum) / static_cast<double>(rt.bucket_clicks)
                             : rt.prev_cpc_mean;
    const double pg = rt.prev_pcvr_mean > 1e-12 ? (cur_pcvr - rt.prev_pcvr_mean) / rt.prev_pcvr_mean : 0.0;
    const double cg = rt.prev_cpc_mean > 1e-12 ? (cur_cpc - rt.prev_cpc_mean) / rt.prev_cpc_mean : 0.0;
    const double target = money_units(adv.target_cpa);
    const double cd = rt.day_conversions > 0
                          ? (money_units(rt.day_cost) / static_cast<double>(rt.day_conversions) - target) / target
                          : 0.0;
    return discretize_alpha_state(bucket, spent_ratio, pg, cg, cd);
  }

  void begin_bucket_alpha(int day, int bucket, Rng& alpha_rng) {
    if (!cfg_.toggles.alpha) return;
    for (size_t adv = 0; adv < market_.advertisers.size(); ++adv) {
      if (arms_[adv] != Arm::kAiads) continue;
      auto& rt = alpha_rt_[adv];
      rt.state = alpha_state_of(static_cast<int>(adv), bucket);
      rt.action = policy_for(static_cast<int>(adv))
                      .select_action(rt.state, day < cfg_.alpha_explore_days, alpha_rng);
      rt.factor = alpha_to_factor(alpha_ratio(rt.action));
      rt.active = true;
    }
  }

  void end_bucket_alpha(int day, int bucket) {
    if (!cfg_.toggles.alpha) return;
    for (size_t adv = 0; adv < market_.advertisers.size(); ++adv) {
      if (arms_[adv] != Arm::kAiads) continue;
      auto& rt = alpha_rt_[adv];
      if (!rt.active) continue;
      const auto& profile = market_.advertisers[adv];
      if (rt.day_cost > 0 || rt.day_conversions > 0) {
        const double target = money_units(profile.target_cpa);
        const double real = rt.day_conversions > 0
                                ? money_units(rt.day_cost) / static_cast<double>(rt.day_conversions)
                                : std::numeric_limits<double>::infinity();
        const double reward = std::isfinite(real) ? alpha_reward(real, target) : 0.0;
        const AlphaState next = alpha_state_of(static_cast<int>(adv), std::min(bucket + 1, kNumBuckets - 1));
        policy_for(static_cast<int>(adv)).step(rt.state, rt.action, reward, next, bucket == kNumBuckets - 1);
      }
      // Roll bucket aggregates into the previous-bucket gauges.
      if (rt.bucket_impressions > 0)
        rt.prev_pcvr_mean = rt.bucket_pcvr_sum / static_cast<double>(rt.bucket_impressions);
      if (rt.bucket_clicks > 0)
        rt.prev_cpc_mean = money_units(rt.bucket_cpc_sum) / static_cast<double>(rt.bucket_clicks);
      rt.bucket_pcvr_sum = 0.0;
      rt.bucket_impressions = 0;
      rt.bucket_cpc_sum = 0;
      rt.bucket_clicks = 0;
      (void)day;
    }
  }

  // -- Query pipeline ---------------------------------------------------------

  void process_query(int day, int bucket, double elapsed, const Query& q, Rng& click_rng,
                     Rng& conv_rng) {
    const int64_t auction_id = next_auction_id_++;
    AuctionRequest req;
    req.auction_id = auction_id;
    req.query_id = q.id;
    req.slots = cfg_.slots;
    std::vector<EntryContext> contexts;

    // Aiads arm: union retrieval (or keyword broad match only when the
    // targeting toggle is off), deduplicated to one entry per advertiser.
    {
      TargetingToggles toggles;
      toggles.term = toggles.semantic = toggles.pathsim = cfg_.toggles.targeting;
      toggles.keyword_broad = true;
      const CandidateSet cands = targeting_->target(q, cfg_.k_each, cfg_.relevance_floor, toggles);
      std::map<int, const Candidate*> best_by_adv;
      for (const auto& c : cands.items) {
        const int adv = market_.ad(c.ad_id).advertiser_id;
        if (arms_[static_cast<size_t>(adv)] != Arm::kAiads) continue;
        auto [it, inserted] = best_by_adv.emplace(adv, &c);
        if (!inserted && c.norm > it->second->norm) it->second = &c;
      }
      for (const auto& [adv_id, cand] : best_by_adv)
        if (auto ctx = build_aiads_entry(day, bucket, elapsed, q, adv_id, cand->ad_id)) {
          const double pctr = response_.predict_ctr(ctx->fv);
          if (pctr < cfg_.quality_floor_pctr) continue;
          req.entries.push_back({ctx->ad_id, adv_id, ctx->bid, pctr, ctx->cvr_cal});
          contexts.push_back(std::move(*ctx));
        }
    }

    // Manual arm: declared match types, static bids, first (static) ad.
    for (const auto& adv : market_.advertisers) {
      if (arms_[static_cast<size_t>(adv.id)] != Arm::kManual) continue;
      const auto match = match_manual_keyword(adv, q.text);
      if (!match) continue;
      const Money remaining = ledger_.remaining_budget(adv.id);
      if (remaining <= 0) continue;
      EntryContext ctx;
      ctx.ad_id = adv.ads.front().id;
      ctx.advertiser_id = adv.id;
      ctx.arm = Arm::kManual;
      ctx.format = default_format_counts();
      ctx.fv = make_features(q, adv.ads.front(), adv.id, adv.vertical, ctx.format, cfg_.features);
      ctx.pcvr_raw = response_.predict_cvr(ctx.fv, adv.conversion_type);
      ctx.cvr_cal = calibrator_.apply(ctx.pcvr_raw);
      ctx.matched_keyword = match->first->id;
      ctx.bid = std::min(match->second, remaining);
      if (ctx.bid <= 0) continue;
      const double pctr = response_.predict_ctr(ctx.fv);
      if (pctr < cfg_.quality_floor_pctr) continue;
      req.entries.push_back({ctx.ad_id, adv.id, ctx.bid, pctr, ctx.cvr_cal,
                             keyword_reserve(match->first->id)});
      contexts.push_back(std::move(ctx));
    }

    const AuctionOutcome outcome = run_auction(req, cfg_.reserve, accounts_);
    stats_.auctions++;
    if (observer_) observer_(req, outcome, ledger_);

    auto& day_stats = stats_.days.back();
    auto& arm_totals = stats_.arm_days.back();
    for (const auto& win : outcome.winners) {
      const EntryContext* ctx = nullptr;
      for (const auto& c : contexts)
        if (c.advertiser_id == win.advertiser_id) {
          ctx = &c;
          break;
        }
      const auto& adv = market_.advertisers[static_cast<size_t>(win.advertiser_id)];
      const Ad& ad = market_.ad(win.ad_id);

      ledger_.record_impression(win.advertiser_id);
      const int64_t imp_id = next_impression_id_++;
      day_logs_.imps.push_back({imp_id, ctx->fv});
      day_stats[static_cast<size_t>(win.advertiser_id)].impressions++;
      auto& at = arm_totals[static_cast<size_t>(ctx->arm)];
      at.impressions++;
      at.relevance_sum += market_.gt.relevance(
          q, market_.query_pool[static_cast<size_t>(q.id)].vertical, ad, adv.vertical);

      auto& rt = alpha_rt_[static_cast<size_t>(win.advertiser_id)];
      if (ctx->arm == Arm::kAiads) {
        rt.bucket_pcvr_sum += ctx->pcvr_raw;
        rt.bucket_impressions++;
      }

      const double p_click = market_.gt.ctr(q, ad, adv.vertical, ctx->format) *
                             cfg_.position_decay[static_cast<size_t>(win.position)];
      const bool clicked = click_rng.bernoulli(p_click);
      bool converted = false;
      if (clicked) {
        ledger_.record_click(win.advertiser_id, win.cpc);
        day_logs_.clicks.push_back({imp_id, adv.conversion_type});
        auto& ds = day_stats[static_cast<size_t>(win.advertiser_id)];
        ds.clicks++;
        ds.cost += win.cpc;
        ds.bucket_spend[static_cast<size_t>(bucket)] += win.cpc;
        at.clicks++;
        at.cost += win.cpc;
        if (ctx->arm == Arm::kAiads) {
          af_stats_.observe(af_stats_.key(win.advertiser_id, bucket), win.bid, win.cpc);
          rt.bucket_cpc_sum += win.cpc;
          rt.bucket_clicks++;
          rt.day_cost += win.cpc;
          diag_.clicked++;
          diag_.sum_cvr_cal += ctx->cvr_cal;
          diag_.sum_bid_units += money_units(win.bid);
          diag_.sum_cpc_units += money_units(win.cpc);
          diag_.sum_af += ctx->af;
          diag_.sum_alpha += ctx->alpha;
          diag_.sum_bf += ctx->bf;
          auto& ad_diag = adv_diag_[static_cast<size_t>(win.advertiser_id)];
          ad_diag.clicked++;
          ad_diag.sum_cvr_cal += ctx->cvr_cal;
          ad_diag.sum_bid_units += money_units(win.bid);
          ad_diag.sum_cpc_units += money_units(win.cpc);
        }
        note_click(q.id, win.ad_id, ctx->matched_keyword);
        converted = conv_rng.bernoulli(market_.gt.cvr(q, ad, adv.vertical, adv.conversion_type));
        if (converted && ctx->arm == Arm::kAiads) {
          diag_.sum_converted += 1.0;
          adv_diag_[static_cast<size_t>(win.advertiser_id)].sum_converted += 1.0;
        }
        if (converted) {
          ledger_.record_conversion(win.advertiser_id);
          day_logs_.convs.push_back({imp_id, adv.conversion_type});
          day_stats[static_cast<size_t>(win.advertiser_id)].conversions++;
          at.conversions++;
          if (ctx->arm == Arm::kAiads) rt.day_conversions++;
        }
        cf_today_.push_back({ctx->fv, adv.conversion_type, converted});
        if (ctx->arm == Arm::kAiads) {
          auto& track = cvr_track_[static_cast<size_t>(win.advertiser_id)];
          track.predicted_sum += ctx->cvr_cal;
          track.converted_sum += converted ? 1.0 : 0.0;
        }
        if (ctx->arm == Arm::kAiads) {
          BuyerOutcome bo{true, true, win.cpc,
                          ctx->cvr_cal * money_units(adv.target_cpa)};
          accounts_[static_cast<size_t>(win.advertiser_id)] =
              account_update(accounts_[static_cast<size_t>(win.advertiser_id)], bo);
        }
      }
      if (auction_log_.is_open()) {
        char line[320];
        std::snprintf(line, sizeof(line),
                      "%d,%d,%lld,%d,%d,%d,%d,%d,%s,%s,%s,%s,%.9g,%d,%d,%.9g,%.9g\n", day, bucket,
                      static_cast<long long>(auction_id), q.id, q.user_segment, win.position,
                      win.ad_id, win.advertiser_id, std::string(arm_name(ctx->arm)).c_str(),
                      money_str(win.bid).c_str(), money_str(win.cpc).c_str(),
                      money_str(win.reserve).c_str(), win.score, clicked ? 1 : 0,
                      converted ? 1 : 0,
                      market_.gt.relevance(q, market_.query_pool[static_cast<size_t>(q.id)].vertical,
                                           ad, adv.vertical),
                      accounts_[static_cast<size_t>(win.advertiser_id)].balance_units);
        auction_log_ << line;
      }
    }
    (void)day;
  }

  std::optional<EntryContext> build_aiads_entry(int day, int bucket, double elapsed, const Query& q,
                                                int advertiser_id, int ad_id) {
    const auto& adv = market_.advertisers[static_cast<size_t>(advertiser_id)];
    const auto& row = ledger_.rows[static_cast<size_t>(advertiser_id)];
    const Money remaining = ledger_.remaining_budget(advertiser_id);
    if (remaining <= 0) return std::nullopt;

    double bf = 1.0;
    if (cfg_.toggles.pacing) {
      const auto d = compute_bf(pacing_state_, bucket, elapsed, row.spent_today, row.daily_budget);
      if (d.skip) return std::nullopt;
      bf = d.factor;
    }

    EntryContext ctx;
    ctx.ad_id = ad_id;
    ctx.advertiser_id = advertiser_id;
    ctx.arm = Arm::kAiads;
    const Ad& ad = market_.ad(ad_id);
    ctx.format = default_format_counts();
    if (cfg_.toggles.creation && !ad_formats_[static_cast<size_t>(ad_id)].empty()) {
      // eCPM-selected format, memoized per (ad, segment) within a day.
      const size_t cache_key =
          static_cast<size_t>(ad_id) * static_cast<size_t>(market_.gt.n_segments) +
          static_cast<size_t>(q.user_segment);
      auto& cached = format_cache_[cache_key];
      if (!cached) {
        EvalContext ec{&q, &ad, advertiser_id, adv.vertical};
        const AdFormat& best = select_format(ad_formats_[static_cast<size_t>(ad_id)],
                                             adv.target_cpa, ec, response_, adv.conversion_type);
        cached = best.counts;
      }
      ctx.format = *cached;
    }
    ctx.fv = make_features(q, ad, advertiser_id, adv.vertical, ctx.format, cfg_.features);
    if (response_.predict_ctr(ctx.fv) < std::max(cfg_.quality_floor_pctr, cfg_.aiads_quality_floor))
      return std::nullopt;
    ctx.pcvr_raw = response_.predict_cvr(ctx.fv, adv.conversion_type);
    ctx.cvr_cal = calibrator_.apply(ctx.pcvr_raw);
    {
      const auto& track = cvr_track_[static_cast<size_t>(advertiser_id)];
      const double pseudo = 15.0 * std::max(0.05, ctx.cvr_cal);
      const double corr = std::clamp((track.converted_sum + pseudo) / (track.predicted_sum + pseudo),
                                     0.6, 1.5);
      ctx.cvr_cal = std::clamp(ctx.cvr_cal * corr, 0.0, 1.0);
    }
    const double cf =
        ctx.pcvr_raw > 1e-12 ? std::clamp(ctx.cvr_cal / ctx.pcvr_raw, cfg_.cf_min, cfg_.cf_max) : 1.0;
    const double af = af_model_.factor(af_stats_.key(advertiser_id, bucket));
    const double alpha =
        cfg_.toggles.alpha ? alpha_rt_[static_cast<size_t>(advertiser_id)].factor : 1.0;

    BidContext bc;
    bc.advertiser_id = advertiser_id;
    bc.ad_id = ad_id;
    bc.query_id = q.id;
    bc.bucket = bucket;
    bc.target_cpa = adv.target_cpa;
    bc.pctr = response_.predict_ctr(ctx.fv);
    bc.pcvr = ctx.pcvr_raw;
    bc.daily_budget = row.daily_budget;
    bc.spent = row.spent_today;
    bc.elapsed_traffic_frac = elapsed;
    const auto decision = compute_rtb(bc, af, bf, cf, alpha);
    ctx.af = af;
    ctx.bf = bf;
    ctx.alpha = alpha;
    ctx.bid = std::min(decision.rtb, remaining);
    if (bid_log_.is_open()) {
      char line[256];
      std::snprintf(line, sizeof(line), "%d,%d,%lld,%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s\n", day,
                    bucket, static_cast<long long>(next_auction_id_ - 1), advertiser_id, ad_id,
                    decision.factors.cpa_units, decision.factors.pcvr, decision.factors.af,
                    decision.factors.bf, decision.factors.cf, decision.factors.alpha,
                    money_str(decision.rtb).c_str());
      bid_log_ << line;
    }
    if (ctx.bid <= 0) return std::nullopt;
    return ctx;
  }

  void end_of_day(int day) {
    // Response model: incremental pass over the day's logs.
    if (day_logs_.imps.size() >= cfg_.response_min_rows && !day_logs_.clicks.empty()) {
      ResponseTrainConfig tc = cfg_.response_train;
      tc.seed = cfg_.seed ^ (0xBEEF00ULL + static_cast<uint64_t>(day));
      train_response_model(response_, day_logs_.imps, day_logs_.clicks, day_logs_.convs, tc);
    }
    day_logs_ = {};

    cf_window_.push_back(std::move(cf_today_));
    cf_today_.clear();
    while (cf_window_.size() > 3) cf_window_.pop_front();
    af_stats_.decay_day();
    for (auto& track : cvr_track_) {
      track.predicted_sum *= 0.7;
      track.converted_sum *= 0.7;
    }

    rebuild_documents();
    const bool refresh_due =
        day >= cfg_.embed_train_day &&
        (!embeddings_ready_ || ((day - cfg_.embed_train_day) % std::max(1, cfg_.embed_refresh_days) == 0));
    if (refresh_due) {
      refresh_embeddings(day);
      rebuild_documents();  // targeting picks up the fresh index pointers
    }

    for (auto& rt : alpha_rt_) {
      rt.day_cost = 0;
      rt.day_conversions = 0;
      rt.prev_pcvr_mean = 0.0;
      rt.prev_cpc_mean = 0.0;
      rt.active = false;
    }
    stats_.ledger = ledger_;
  }

  // -- Click bookkeeping used by document/graph builders ----------------------

 public:
  /// Cumulative (query, ad) click counts; exposed for offline tooling.
  const std::map<std::pair<int, int>, int64_t>& click_counts() const { return click_counts_; }

 private:
  /// Legacy rate card: a deterministic per-keyword floor, used for
  /// keyword-mediated (manual baseline) entries only.
  Money keyword_reserve(int keyword_id) const {
    if (cfg_.keyword_reserve_hi <= 0.0) return -1;
    const uint64_t h = fnv1a64_mix(static_cast<uint64_t>(keyword_id) ^ (cfg_.seed << 7));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return money_from_units(cfg_.keyword_reserve_lo +
                            (cfg_.keyword_reserve_hi - cfg_.keyword_reserve_lo) * u);
  }

  void note_click(int query_id, int ad_id, int keyword_id) {
    click_counts_[{query_id, ad_id}]++;
    if (keyword_id >= 0) click_keyword_[{query_id, ad_id}] = keyword_id;
  }

  void open_run_dir() {
    namespace fs = std::filesystem;
    fs::create_directories(cfg_.run_dir);
    auction_log_.open(fs::path(cfg_.run_dir) / "auction_log.csv");
    bid_log_.open(fs::path(cfg_.run_dir) / "bid_log.csv");
    char header[160];
    std::snprintf(header, sizeof(header), "# seed=%llu config_hash=%016llx\n",
                  static_cast<unsigned long long>(cfg_.seed),
                  static_cast<unsigned long long>(config_hash(cfg_)));
    auction_log_ << header
                 << "day,bucket,auction_id,query_id,segment,slot,ad_id,advertiser_id,arm,bid,cpc,"
                    "reserve,score,clicked,converted,relevance,balance\n";
    bid_log_ << header << "day,bucket,auction_id,advertiser_id,ad_id,cpa,pcvr,af,bf,cf,alpha,rtb\n";
  }

  void finalize_outputs() {
    if (cfg_.run_dir.empty()) return;
    namespace fs = std::filesystem;
    {
      nlohmann::ordered_json manifest;
      manifest["format_versions"] = {{"market", kMarketFileHeader},
                                     {"model", "ADSMARKET_MODEL_V1"},
                                     {"index", "ADSMARKET_INDEX_V1"},
                                     {"qtable", "ADSMARKET_QTABLE_V1"}};
      char hash[24];
      std::snprintf(hash, sizeof(hash), "%016llx",
                    static_cast<unsigned long long>(config_hash(cfg_)));
      manifest["config_hash"] = hash;
      manifest["seed"] = cfg_.seed;
      std::ofstream(fs::path(cfg_.run_dir) / "manifest.json") << manifest.dump(2) << "\n";
    }
    {
      std::ofstream report(fs::path(cfg_.run_dir) / "report.json");
      report << run_report_json().dump(2) << "\n";
    }
    auction_log_.close();
    bid_log_.close();
  }

 public:
  nlohmann::ordered_json run_report_json() const {
    nlohmann::ordered_json j;
    j["days"] = stats_.days.size();
    j["auctions"] = stats_.auctions;
    j["platform_revenue"] = money_units(platform_revenue(ledger_));
    std::vector<uint64_t> checks = stats_.query_checksums;
    std::vector<std::string> hex;
    for (uint64_t c : checks) {
      char buf[24];
      std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(c));
      hex.push_back(buf);
    }
    j["query_stream_checksums"] = hex;
    for (int a = 0; a < 2; ++a) {
      const Arm arm = static_cast<Arm>(a);
      int64_t imps = 0, clicks = 0, convs = 0;
      Money cost = 0;
      double rel = 0.0;
      for (const auto& d : stats_.arm_days) {
        imps += d[static_cast<size_t>(a)].impressions;
        clicks += d[static_cast<size_t>(a)].clicks;
        convs += d[static_cast<size_t>(a)].conversions;
        cost += d[static_cast<size_t>(a)].cost;
        rel += d[static_cast<size_t>(a)].relevance_sum;
      }
      nlohmann::ordered_json arm_j;
      arm_j["impressions"] = imps;
      arm_j["clicks"] = clicks;
      arm_j["conversions"] = convs;
      arm_j["cost"] = money_units(cost);
      arm_j["cvr"] = clicks > 0 ? static_cast<double>(convs) / static_cast<double>(clicks) : 0.0;
      arm_j["cpa"] = convs > 0 ? money_units(cost) / static_cast<double>(convs) : 0.0;
      arm_j["relevance"] = imps > 0 ? rel / static_cast<double>(imps) : 0.0;
      j[std::string(arm_name(arm))] = arm_j;
    }
    return j;
  }

 private:
  const MarketSpec& market_;
  SimConfig cfg_;
  std::vector<Arm> arms_;
  Rng root_;
  SimLedger ledger_;

  ResponseModel response_;
  Calibrator calibrator_;
  struct CfSample {
    FeatureVector fv;
    int conversion_type;
    bool converted;
  };
  std::deque<std::vector<CfSample>> cf_window_;
  std::vector<CfSample> cf_today_;
  AFStats af_stats_;
  AFModel af_model_;
  // Per-advertiser realized-vs-predicted CVR tracker: an empirical-Bayes
  // multiplier on top of the global isotonic map, shrunk by pseudo-count.
  struct CvrTrack {
    double predicted_sum = 0.0;
    double converted_sum = 0.0;
  };
  std::vector<CvrTrack> cvr_track_;
  std::vector<BankAccount> accounts_;
  PacingState pacing_state_;
  std::vector<AlphaPolicy> alpha_;
  std::vector<AlphaRuntime> alpha_rt_;

  DocumentStore docs_;
  InvertedIndex index_;
  std::optional<TargetingService> targeting_;
  EmbeddingTable embed_table_;
  bool embeddings_ready_ = false;
  TwoTowerModel tower_;
  KnnIndex ad_knn_;
  std::map<int, std::vector<PathSimEntry>> pathsim_index_;
  std::vector<std::vector<AdFormat>> ad_formats_;
  std::vector<std::optional<ComponentCounts>> format_cache_;  // (ad, segment), per day

  struct DayLogs {
    std::vector<ImpressionRow> imps;
    std::vector<ClickRow> clicks;
    std::vector<ConversionRow> convs;
  };
  DayLogs day_logs_;
  std::map<std::pair<int, int>, int64_t> click_counts_;
  std::map<std::pair<int, int>, int> click_keyword_;
  int64_t next_impression_id_ = 0;
  int64_t next_auction_id_ = 0;

  RunStats stats_;
  BidDiagnostics diag_;
  std::vector<AdvertiserDiag> adv_diag_;
  AuctionObserver observer_;
  std::ofstream auction_log_;
  std::ofstream bid_log_;
};

// ---------------------------------------------------------------------------
// Harness entry points

inline MarketSpec make_market(const SimConfig& cfg) {
  return generate_market(cfg.seed, cfg.n_advertisers, cfg.vocab_size, cfg.market);
}

/// Arm partition: deterministic seeded shuffle, first ab_split share manual.
inline std::vector<Arm> partition_arms(const MarketSpec& market, const SimConfig& cfg,
                                       Arm group_a = Arm::kManual, Arm group_b = Arm::kAiads) {
  if (!(cfg.ab_split > 0.0 && cfg.ab_split < 1.0))
    throw std::invalid_argument("ab_split must be inside (0,1)");
  std::vector<int> ids(market.advertisers.size());
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  Rng rng = Rng(cfg.seed).fork(0xAB5917);
  rng.shuffle(ids);
  const size_t n_a = static_cast<size_t>(static_cast<double>(ids.size()) * cfg.ab_split);
  std::vector<Arm> arms(ids.size(), group_b);
  for (size_t i = 0; i < n_a; ++i) arms[static_cast<size_t>(ids[i])] = group_a;
  return arms;
}

struct ArmMetrics {
  int n_advertisers = 0;
  int64_t impressions = 0, clicks = 0, conversions = 0;
  double cost_units = 0.0;
  double conversions_per_advertiser = 0.0;
  double cvr = 0.0;
  double cpa_units = 0.0;
  double relevance = 0.0;
};

struct ABReport {
  ArmMetrics manual;
  ArmMetrics aiads;
  double conversions_delta = 0.0;  // per-advertiser aiads minus manual
  double cpa_delta = 0.0;
  double relevance_delta = 0.0;
  double revenue_delta = 0.0;
  std::vector<uint64_t> query_checksums;
};

inline ArmMetrics arm_metrics(const RunStats& stats, Arm arm, int from_day, int to_day) {
  ArmMetrics m;
  for (Arm a : stats.arms)
    if (a == arm) m.n_advertisers++;
  for (int d = from_day; d < to_day && d < static_cast<int>(stats.days.size()); ++d) {
    const auto& totals = stats.arm_days[static_cast<size_t>(d)][static_cast<size_t>(arm)];
    m.impressions += totals.impressions;
    m.clicks += totals.clicks;
    m.conversions += totals.conversions;
    m.cost_units += money_units(totals.cost);
    m.relevance += totals.relevance_sum;
  }
  m.relevance = m.impressions > 0 ? m.relevance / static_cast<double>(m.impressions) : 0.0;
  m.cvr = m.clicks > 0 ? static_cast<double>(m.conversions) / static_cast<double>(m.clicks) : 0.0;
  m.cpa_units = m.conversions > 0 ? m.cost_units / static_cast<double>(m.conversions) : 0.0;
  m.conversions_per_advertiser =
      m.n_advertisers > 0 ? static_cast<double>(m.conversions) / m.n_advertisers : 0.0;
  return m;
}

/// Offline A/B: both arms live in one market over a common query stream
/// (common random numbers by construction). Post-warmup days feed the report.
inline ABReport run_ab(const MarketSpec& market, const SimConfig& cfg,
                       Arm group_a = Arm::kManual, Arm group_b = Arm::kAiads,
                       AuctionObserver observer = nullptr) {
  Simulation sim(market, cfg, partition_arms(market, cfg, group_a, group_b), std::move(observer));
  sim.run();
  const auto& stats = sim.stats();
  ABReport report;
  report.manual = arm_metrics(stats, Arm::kManual, cfg.warmup_days, cfg.days);
  report.aiads = arm_metrics(stats, Arm::kAiads, cfg.warmup_days, cfg.days);
  report.conversions_delta =
      report.aiads.conversions_per_advertiser - report.manual.conversions_per_advertiser;
  report.cpa_delta = report.aiads.cpa_units - report.manual.cpa_units;
  report.relevance_delta = report.aiads.relevance - report.manual.relevance;
  report.revenue_delta =
      (report.manual.n_advertisers > 0 && report.aiads.n_advertisers > 0)
          ? report.aiads.cost_units / report.aiads.n_advertisers -
                report.manual.cost_units / report.manual.n_advertisers
          : 0.0;
  report.query_checksums = stats.query_checksums;
  return report;
}

/// Recomputes per-arm metrics straight from an auction log CSV; the oracle
/// behind the `report` subcommand and the report-consistency tests.
struct LogReport {
  struct ArmRow {
    int64_t impressions = 0, clicks = 0, conversions = 0;
    double cost_units = 0.0;
    double relevance_sum = 0.0;
  };
  std::map<std::string, ArmRow> arms;
  int64_t auctions = 0;

  double relevance(const std::string& arm) const {
    const auto it = arms.find(arm);
    return it != arms.end() && it->second.impressions > 0
               ? it->second.relevance_sum / static_cast<double>(it->second.impressions)
               : 0.0;
  }
  double cpa(const std::string& arm) const {
    const auto it = arms.find(arm);
    return it != arms.end() && it->second.conversions > 0
               ? it->second.cost_units / static_cast<double>(it->second.conversions)
               : 0.0;
  }
};

inline LogReport report_from_auction_log(std::istream& is, int from_day = 0,
                                         int to_day = 1 << 30) {
  LogReport report;
  std::string line;
  std::set<int64_t> seen_auctions;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("day,", 0) == 0) continue;
    std::vector<std::string> cells;
    size_t pos = 0;
    while (pos <= line.size()) {
      const size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cells.size() < 17) throw std::runtime_error("bad auction log row");
    const int day = std::stoi(cells[0]);
    if (day < from_day || day >= to_day) continue;
    seen_auctions.insert(std::stoll(cells[2]));
    auto& row = report.arms[cells[8]];
    row.impressions++;
    const bool clicked = cells[13] == "1";
    const bool converted = cells[14] == "1";
    if (clicked) {
      row.clicks++;
      row.cost_units += money_units(money_parse(cells[10]));
    }
    if (converted) row.conversions++;
    row.relevance_sum += std::stod(cells[15]);
  }
  report.auctions = static_cast<int64_t>(seen_auctions.size());
  return report;
}

}  // namespace adsmarket
