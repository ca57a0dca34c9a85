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
// Query and ad documents: base text plus click-derived extensions. Documents
// feed the inverted index, the two-tower matcher and node attribute terms.

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "adsmarket/hetgraph.hpp"
#include "adsmarket/market.hpp"

namespace adsmarket {

struct QueryDocument {
  int query_id = 0;
  std::vector<std::string> text;              // always present
  std::vector<std::string> session_terms;     // co-clicked neighbour queries
  std::vector<std::string> clicked_titles;    // creatives this query clicked

  std::vector<std::string> terms() const {
    std::vector<std::string> all(text);
    all.insert(all.end(), session_terms.begin(), session_terms.end());
    all.insert(all.end(), clicked_titles.begin(), clicked_titles.end());
    return all;
  }
};

struct AdDocument {
  int ad_id = 0;
  std::vector<std::string> text;               // creative, always present
  std::vector<std::string> landing_extract;
  std::vector<std::string> clicked_query_terms;
  std::vector<std::string> clicked_keywords;
  std::vector<std::string> clicked_creations;  // title payloads of clicked formats

  std::vector<std::string> terms() const {
    std::vector<std::string> all(text);
    all.insert(all.end(), landing_extract.begin(), landing_extract.end());
    all.insert(all.end(), clicked_query_terms.begin(), clicked_query_terms.end());
    all.insert(all.end(), clicked_keywords.begin(), clicked_keywords.end());
    all.insert(all.end(), clicked_creations.begin(), clicked_creations.end());
    return all;
  }
};

/// One aggregated clicked event for document assembly: which query clicked
/// which ad, through which matched keyword (-1 for none).
struct DocClickEvent {
  int query_id = 0;
  int ad_id = 0;
  int keyword_id = -1;
  int64_t count = 0;
};

struct DocumentBuildParams {
  int64_t min_support = 1;
  int max_session_neighbors = 5;
  int max_clicked_queries = 10;
};

struct DocumentStore {
  std::vector<QueryDocument> queries;  // dense by query pool id
  std::vector<AdDocument> ads;         // dense by ad id
};

/// Every ad gets a document (text + landing extract at minimum); extensions
/// only from events at or above min_support.
inline DocumentStore build_documents(const std::vector<DocClickEvent>& events,
                                     const MarketSpec& market,
                                     const DocumentBuildParams& params = {}) {
  DocumentStore store;
  store.queries.resize(market.query_pool.size());
  store.ads.resize(static_cast<size_t>(market.total_ads()));
  for (const auto& qp : market.query_pool) {
    auto& d = store.queries[static_cast<size_t>(qp.id)];
    d.query_id = qp.id;
    d.text = qp.text;
  }
  std::map<int, const Keyword*> keyword_by_id;
  for (const auto& adv : market.advertisers)
    for (const auto& kw : adv.keywords) keyword_by_id[kw.id] = &kw;
  for (int ad_id = 0; ad_id < market.total_ads(); ++ad_id) {
    auto& d = store.ads[static_cast<size_t>(ad_id)];
    const Ad& ad = market.ad(ad_id);
    d.ad_id = ad_id;
    d.text = ad.creative_text;
    d.landing_extract = ad.landing_terms;
  }

  // Aggregate by (query, ad), collecting mediating keywords.
  std::map<std::pair<int, int>, int64_t> counts;
  std::map<std::pair<int, int>, std::set<int>> keywords;
  for (const auto& e : events) {
    if (e.query_id < 0 || static_cast<size_t>(e.query_id) >= store.queries.size() || e.ad_id < 0 ||
        static_cast<size_t>(e.ad_id) >= store.ads.size())
      throw std::invalid_argument("document event references unknown query or ad");
    counts[{e.query_id, e.ad_id}] += e.count;
    if (e.keyword_id >= 0) keywords[{e.query_id, e.ad_id}].insert(e.keyword_id);
  }

  std::map<int, std::vector<int>> ads_clicked_by;   // query -> ads
  std::map<int, std::vector<int>> queries_clicking; // ad -> queries
  for (const auto& [key, n] : counts) {
    if (n < params.min_support) continue;
    const auto [qid, aid] = key;
    ads_clicked_by[qid].push_back(aid);
    queries_clicking[aid].push_back(qid);

    auto& addoc = store.ads[static_cast<size_t>(aid)];
    if (static_cast<int>(queries_clicking[aid].size()) <= params.max_clicked_queries) {
      const auto& qtext = market.query_pool[static_cast<size_t>(qid)].text;
      addoc.clicked_query_terms.insert(addoc.clicked_query_terms.end(), qtext.begin(), qtext.end());
    }
    if (auto it = keywords.find(key); it != keywords.end())
      for (int kw_id : it->second) {
        const auto* kw = keyword_by_id.at(kw_id);
        addoc.clicked_keywords.insert(addoc.clicked_keywords.end(), kw->text.begin(), kw->text.end());
      }
    for (const auto& mat : market.ad(aid).materials)
      if (mat.kind == MaterialKind::kTextTitle) {
        const auto toks = tokenize(mat.payload);
        addoc.clicked_creations.insert(addoc.clicked_creations.end(), toks.begin(), toks.end());
        break;
      }
  }

  for (auto& [qid, ads] : ads_clicked_by) {
    auto& qdoc = store.queries[static_cast<size_t>(qid)];
    for (int aid : ads) {
      const auto& creative = market.ad(aid).creative_text;
      qdoc.clicked_titles.insert(qdoc.clicked_titles.end(), creative.begin(), creative.end());
    }
    // Session extension: queries sharing a clicked ad, capped, id order.
    std::set<int> nbrs;
    for (int aid : ads)
      for (int other : queries_clicking[aid]) {
        if (other == qid) continue;
        nbrs.insert(other);
        if (static_cast<int>(nbrs.size()) >= params.max_session_neighbors) break;
      }
    for (int other : nbrs) {
      const auto& text = market.query_pool[static_cast<size_t>(other)].text;
      qdoc.session_terms.insert(qdoc.session_terms.end(), text.begin(), text.end());
    }
  }
  return store;
}

/// Attribute terms for graph nodes; feeds term-composed features.
inline std::vector<std::string> market_node_terms(const MarketSpec& market, NodeRef node) {
  switch (node.type) {
    case NodeType::kQuery:
      return market.query_pool.at(static_cast<size_t>(node.id)).text;
    case NodeType::kKeyword: {
      for (const auto& adv : market.advertisers)
        for (const auto& kw : adv.keywords)
          if (kw.id == node.id) return kw.text;
      throw std::invalid_argument("unknown keyword node");
    }
    case NodeType::kAd: {
      const Ad& ad = market.ad(node.id);
      std::vector<std::string> t(ad.creative_text);
      t.insert(t.end(), ad.landing_terms.begin(), ad.landing_terms.end());
      return t;
    }
    default: {
      const auto& adv = market.advertisers.at(static_cast<size_t>(node.id));
      std::vector<std::string> t;
      for (const auto& ad : adv.ads) t.insert(t.end(), ad.creative_text.begin(), ad.creative_text.end());
      return t;
    }
  }
}

}  // namespace adsmarket
