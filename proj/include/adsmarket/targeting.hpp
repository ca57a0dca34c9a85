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
// Intelligent targeting: union of keyword broad match, inverted-index term
// retrieval, semantic retrieval and the PathSim index, merged into one
// deduplicated candidate set. Also hosts the manual-arm keyword matcher
// (exact / phrase / broad).

#include <algorithm>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "adsmarket/documents.hpp"
#include "adsmarket/inverted_index.hpp"
#include "adsmarket/knn.hpp"
#include "adsmarket/market.hpp"
#include "adsmarket/pathsim.hpp"
#include "adsmarket/two_tower.hpp"

namespace adsmarket {

enum class CandidateSource { kTerm = 0, kSemantic, kPathSim, kKeyword };

inline std::string_view candidate_source_name(CandidateSource s) {
  switch (s) {
    case CandidateSource::kTerm: return "term";
    case CandidateSource::kSemantic: return "semantic";
    case CandidateSource::kPathSim: return "pathsim";
    default: return "keyword";
  }
}

struct Candidate {
  int ad_id = 0;
  CandidateSource source = CandidateSource::kTerm;
  double raw = 0.0;
  double norm = 0.0;  // min-max normalized within its source list

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct CandidateSet {
  std::vector<Candidate> items;  // deduplicated by ad, sorted (norm desc, id asc)
};

/// Min-max normalization over one source's returned list; a constant or
/// singleton list normalizes to 1.
inline void normalize_scores(std::vector<Candidate>& list) {
  if (list.empty()) return;
  double lo = list.front().raw, hi = list.front().raw;
  for (const auto& c : list) {
    lo = std::min(lo, c.raw);
    hi = std::max(hi, c.raw);
  }
  for (auto& c : list) c.norm = hi > lo ? (c.raw - lo) / (hi - lo) : 1.0;
}

/// Dedupe by ad keeping max normalized relevance, apply the relevance floor,
/// cap, and order (norm desc, ad id asc). Idempotent.
inline CandidateSet merge_candidates(const std::vector<Candidate>& pool, double relevance_floor,
                                     size_t cap) {
  std::map<int, Candidate> best;
  for (const auto& c : pool) {
    auto [it, inserted] = best.emplace(c.ad_id, c);
    if (!inserted && c.norm > it->second.norm) it->second = c;
  }
  CandidateSet out;
  for (const auto& [ad, c] : best)
    if (c.norm >= relevance_floor) out.items.push_back(c);
  std::sort(out.items.begin(), out.items.end(), [](const Candidate& a, const Candidate& b) {
    if (a.norm != b.norm) return a.norm > b.norm;
    return a.ad_id < b.ad_id;
  });
  if (out.items.size() > cap) out.items.resize(cap);
  return out;
}

// ---------------------------------------------------------------------------
// Keyword matching (manual baseline semantics, documented in the README):
//  exact  - query tokens equal keyword tokens as multisets
//  phrase - keyword tokens appear as a contiguous subsequence of the query
//  broad  - keyword tokens are a subset of the query tokens

inline bool keyword_matches(const std::vector<std::string>& query_terms, const Keyword& kw,
                            MatchType mode) {
  switch (mode) {
    case MatchType::kExact: {
      if (query_terms.size() != kw.text.size()) return false;
      std::vector<std::string> a(query_terms), b(kw.text);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      return a == b;
    }
    case MatchType::kPhrase: {
      if (kw.text.empty() || kw.text.size() > query_terms.size()) return false;
      for (size_t start = 0; start + kw.text.size() <= query_terms.size(); ++start) {
        bool all = true;
        for (size_t i = 0; i < kw.text.size(); ++i)
          if (query_terms[start + i] != kw.text[i]) {
            all = false;
            break;
          }
        if (all) return true;
      }
      return false;
    }
    default: {
      if (kw.text.empty()) return false;
      for (const auto& t : kw.text)
        if (std::find(query_terms.begin(), query_terms.end(), t) == query_terms.end()) return false;
      return true;
    }
  }
}

/// Manual arm: the best keyword whose declared match type accepts the query.
/// Exact beats phrase beats broad; ties by keyword id.
inline std::optional<std::pair<const Keyword*, Money>> match_manual_keyword(
    const AdvertiserProfile& adv, const std::vector<std::string>& query_terms) {
  const Keyword* best = nullptr;
  int best_rank = 99;
  for (const auto& kw : adv.keywords) {
    if (!keyword_matches(query_terms, kw, kw.match_type)) continue;
    const int rank = static_cast<int>(kw.match_type);
    if (rank < best_rank || (rank == best_rank && best && kw.id < best->id) || !best) {
      best = &kw;
      best_rank = rank;
    }
  }
  if (!best) return std::nullopt;
  return std::make_pair(best, adv.manual_bids.at(best->id));
}

// ---------------------------------------------------------------------------

struct TargetingToggles {
  bool term = true;
  bool semantic = true;
  bool pathsim = true;
  bool keyword_broad = true;
};

/// All sub-services are optional; a missing one simply contributes no
/// candidates, so the service degrades gracefully while models warm up.
class TargetingService {
 public:
  TargetingService(const MarketSpec& market, const DocumentStore* docs,
                   const InvertedIndex* index, const TwoTowerModel* tower,
                   const EmbeddingTable* terms, const KnnIndex* ad_knn,
                   const std::map<int, std::vector<PathSimEntry>>* pathsim_index)
      : market_(market),
        docs_(docs),
        index_(index),
        tower_(tower),
        terms_(terms),
        ad_knn_(ad_knn),
        pathsim_(pathsim_index) {}

  /// Union retrieval for one query. Result size is capped at 4 * k_each.
  CandidateSet target(const Query& q, int k_each, double relevance_floor,
                      const TargetingToggles& toggles = {}) const {
    std::vector<Candidate> pool;
    if (toggles.keyword_broad) {
      auto list = keyword_candidates(q, k_each);
      normalize_scores(list);
      pool.insert(pool.end(), list.begin(), list.end());
    }
    if (toggles.term && index_ != nullptr && docs_ != nullptr) {
      std::vector<Candidate> list;
      const QueryDocument& qdoc = docs_->queries.at(static_cast<size_t>(q.id));
      for (const auto& [ad, score] : index_->retrieve(qdoc, k_each))
        list.push_back({ad, CandidateSource::kTerm, score, 0.0});
      normalize_scores(list);
      pool.insert(pool.end(), list.begin(), list.end());
    }
    if (toggles.semantic && tower_ != nullptr && tower_->trained() && ad_knn_ != nullptr &&
        terms_ != nullptr && docs_ != nullptr) {
      std::vector<Candidate> list;
      const QueryDocument& qdoc = docs_->queries.at(static_cast<size_t>(q.id));
      const auto qv = tower_->encode_query(qdoc.terms(), *terms_);
      for (const auto& [ad, cos] : ad_knn_->query(qv, k_each).items)
        list.push_back({ad, CandidateSource::kSemantic, cos, 0.0});
      normalize_scores(list);
      pool.insert(pool.end(), list.begin(), list.end());
    }
    if (toggles.pathsim && pathsim_ != nullptr) {
      std::vector<Candidate> list;
      if (auto it = pathsim_->find(q.id); it != pathsim_->end()) {
        const size_t n = std::min(it->second.size(), static_cast<size_t>(k_each));
        for (size_t i = 0; i < n; ++i)
          list.push_back({it->second[i].node_id, CandidateSource::kPathSim, it->second[i].score, 0.0});
      }
      normalize_scores(list);
      pool.insert(pool.end(), list.begin(), list.end());
    }
    return merge_candidates(pool, relevance_floor, static_cast<size_t>(4) * static_cast<size_t>(k_each));
  }

 private:
  /// Advanced broad match over every keyword regardless of its declared
  /// match type (target-CPA advertisers are extended to broad).
  std::vector<Candidate> keyword_candidates(const Query& q, int k_each) const {
    std::vector<Candidate> list;
    std::vector<std::string> qd(q.text);
    std::sort(qd.begin(), qd.end());
    qd.erase(std::unique(qd.begin(), qd.end()), qd.end());
    for (const auto& adv : market_.advertisers) {
      double best = 0.0;
      for (const auto& kw : adv.keywords) {
        if (!keyword_matches(q.text, kw, MatchType::kBroad)) continue;
        best = std::max(best,
                        static_cast<double>(kw.text.size()) / static_cast<double>(qd.size()));
      }
      if (best <= 0.0) continue;
      for (const auto& ad : adv.ads) list.push_back({ad.id, CandidateSource::kKeyword, best, 0.0});
    }
    // Ties are common (short keywords); break them by a query-dependent hash
    // so truncation does not systematically favor low ad ids.
    std::sort(list.begin(), list.end(), [&q](const Candidate& a, const Candidate& b) {
      if (a.raw != b.raw) return a.raw > b.raw;
      const uint64_t ha = fnv1a64_mix(static_cast<uint64_t>(a.ad_id) << 20 | static_cast<uint64_t>(q.id));
      const uint64_t hb = fnv1a64_mix(static_cast<uint64_t>(b.ad_id) << 20 | static_cast<uint64_t>(q.id));
      if (ha != hb) return ha < hb;
      return a.ad_id < b.ad_id;
    });
    if (list.size() > static_cast<size_t>(k_each)) list.resize(static_cast<size_t>(k_each));
    return list;
  }

  const MarketSpec& market_;
  const DocumentStore* docs_;
  const InvertedIndex* index_;
  const TwoTowerModel* tower_;
  const EmbeddingTable* terms_;
  const KnnIndex* ad_knn_;
  const std::map<int, std::vector<PathSimEntry>>* pathsim_;
};

}  // namespace adsmarket
