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
// Typed click network: four node types, seven relation types, meta-paths over
// the schema. Graphs are immutable once built.

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adsmarket {

enum class NodeType { kQuery = 0, kKeyword, kAd, kAdvertiser };
inline constexpr int kNumNodeTypes = 4;

enum class Relation {
  kQueryClicksAd = 0,
  kQueryMatchesKeyword,
  kKeywordBelongsAd,
  kAdOwnedByAdvertiser,
  kQueryCooccursQuery,
  kAdSiblingAd,
  kKeywordSiblingKeyword,
};
inline constexpr int kNumRelations = 7;

struct RelationSig {
  NodeType src;
  NodeType dst;
  bool undirected;  // src and dst type equal and edge has no orientation
};

inline RelationSig relation_sig(Relation r) {
  switch (r) {
    case Relation::kQueryClicksAd: return {NodeType::kQuery, NodeType::kAd, false};
    case Relation::kQueryMatchesKeyword: return {NodeType::kQuery, NodeType::kKeyword, false};
    case Relation::kKeywordBelongsAd: return {NodeType::kKeyword, NodeType::kAd, false};
    case Relation::kAdOwnedByAdvertiser: return {NodeType::kAd, NodeType::kAdvertiser, false};
    case Relation::kQueryCooccursQuery: return {NodeType::kQuery, NodeType::kQuery, true};
    case Relation::kAdSiblingAd: return {NodeType::kAd, NodeType::kAd, true};
    default: return {NodeType::kKeyword, NodeType::kKeyword, true};
  }
}

inline std::string_view node_type_name(NodeType t) {
  static constexpr std::array<std::string_view, kNumNodeTypes> names = {"query", "keyword", "ad",
                                                                        "advertiser"};
  return names[static_cast<size_t>(t)];
}

inline NodeType node_type_from_name(std::string_view s) {
  for (int i = 0; i < kNumNodeTypes; ++i)
    if (node_type_name(static_cast<NodeType>(i)) == s) return static_cast<NodeType>(i);
  throw std::invalid_argument("unknown node type: " + std::string(s));
}

inline std::string_view relation_name(Relation r) {
  static constexpr std::array<std::string_view, kNumRelations> names = {
      "clicks", "matches", "belongs", "owned_by", "cooccurs", "ad_sibling", "kw_sibling"};
  return names[static_cast<size_t>(r)];
}

inline Relation relation_from_name(std::string_view s) {
  for (int i = 0; i < kNumRelations; ++i)
    if (relation_name(static_cast<Relation>(i)) == s) return static_cast<Relation>(i);
  throw std::invalid_argument("unknown relation: " + std::string(s));
}

struct NodeRef {
  NodeType type = NodeType::kQuery;
  int id = 0;

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

/// One traversal step: a relation walked forward (src->dst) or reverse.
struct MetaPathStep {
  Relation rel = Relation::kQueryClicksAd;
  bool forward = true;

  NodeType from() const {
    const auto sig = relation_sig(rel);
    return forward ? sig.src : sig.dst;
  }
  NodeType to() const {
    const auto sig = relation_sig(rel);
    return forward ? sig.dst : sig.src;
  }

  friend bool operator==(const MetaPathStep&, const MetaPathStep&) = default;
};

/// Alternating node-type / relation sequence over the schema. Adjacent steps
/// must be type-compatible.
struct MetaPath {
  std::vector<MetaPathStep> steps;

  NodeType start_type() const {
    if (steps.empty()) throw std::invalid_argument("empty meta-path");
    return steps.front().from();
  }
  NodeType end_type() const { return steps.back().to(); }
  size_t length() const { return steps.size(); }

  void validate() const {
    if (steps.empty()) throw std::invalid_argument("meta-path needs at least one relation");
    for (size_t i = 1; i < steps.size(); ++i)
      if (steps[i].from() != steps[i - 1].to())
        throw std::invalid_argument("meta-path steps are not type-compatible");
  }

  /// Compact text form: relations separated by spaces, "~" prefix walks the
  /// relation in reverse, e.g. "clicks ~clicks clicks".
  static MetaPath parse(std::string_view text) {
    MetaPath p;
    std::istringstream is{std::string(text)};
    std::string tok;
    while (is >> tok) {
      MetaPathStep step;
      if (!tok.empty() && tok[0] == '~') {
        step.forward = false;
        tok.erase(0, 1);
      }
      step.rel = relation_from_name(tok);
      p.steps.push_back(step);
    }
    p.validate();
    return p;
  }

  std::string str() const {
    std::string out;
    for (size_t i = 0; i < steps.size(); ++i) {
      if (i) out += ' ';
      if (!steps[i].forward) out += '~';
      out += relation_name(steps[i].rel);
    }
    return out;
  }
};

/// Immutable typed multigraph; parallel click events are accumulated into
/// one weighted edge. Build through GraphBuilder.
class HetGraph {
 public:
  using AdjList = std::vector<std::pair<int, double>>;  // (neighbor id, weight), id-sorted

  int node_count(NodeType t) const { return counts_[static_cast<size_t>(t)]; }

  const AdjList& neighbors(Relation r, bool forward, int src_id) const {
    const auto& table = forward ? fwd_ : rev_;
    const auto& rows = table[static_cast<size_t>(r)];
    static const AdjList empty;
    if (src_id < 0 || static_cast<size_t>(src_id) >= rows.size()) return empty;
    return rows[static_cast<size_t>(src_id)];
  }

  const AdjList& step_neighbors(const MetaPathStep& s, int src_id) const {
    return neighbors(s.rel, s.forward, src_id);
  }

  int64_t edge_count() const { return n_edges_; }

 private:
  friend class GraphBuilder;
  std::array<int, kNumNodeTypes> counts_{};
  std::array<std::vector<AdjList>, kNumRelations> fwd_;
  std::array<std::vector<AdjList>, kNumRelations> rev_;
  int64_t n_edges_ = 0;
};

class GraphBuilder {
 public:
  explicit GraphBuilder(std::array<int, kNumNodeTypes> counts) : counts_(counts) {}

  /// Typed insertion; the relation's type signature is enforced here, so a
  /// mistyped edge is rejected at build time.
  void add_edge(Relation r, NodeRef src, NodeRef dst, double weight) {
    const auto sig = relation_sig(r);
    if (src.type != sig.src || dst.type != sig.dst)
      throw std::invalid_argument("edge endpoints violate relation signature");
    add_edge(r, src.id, dst.id, weight);
  }

  void add_edge(Relation r, int src_id, int dst_id, double weight) {
    const auto sig = relation_sig(r);
    if (weight <= 0.0) throw std::invalid_argument("edge weight must be positive");
    check_id(sig.src, src_id);
    check_id(sig.dst, dst_id);
    edges_[static_cast<size_t>(r)].push_back({src_id, dst_id, weight});
  }

  HetGraph build() {
    HetGraph g;
    g.counts_ = counts_;
    for (int r = 0; r < kNumRelations; ++r) {
      const auto sig = relation_sig(static_cast<Relation>(r));
      auto& fwd = g.fwd_[static_cast<size_t>(r)];
      auto& rev = g.rev_[static_cast<size_t>(r)];
      fwd.assign(static_cast<size_t>(counts_[static_cast<size_t>(sig.src)]), {});
      rev.assign(static_cast<size_t>(counts_[static_cast<size_t>(sig.dst)]), {});
      // Merge duplicates: weights accumulate. Undirected edges canonicalize
      // to (min,max) first, then mirror into both adjacency sides.
      std::map<std::pair<int, int>, double> merged;
      for (const auto& e : edges_[static_cast<size_t>(r)]) {
        auto key = std::make_pair(e.src, e.dst);
        if (sig.undirected && key.first > key.second) std::swap(key.first, key.second);
        merged[key] += e.weight;
      }
      for (const auto& [key, w] : merged) {
        fwd[static_cast<size_t>(key.first)].push_back({key.second, w});
        rev[static_cast<size_t>(key.second)].push_back({key.first, w});
        if (sig.undirected && key.first != key.second) {
          fwd[static_cast<size_t>(key.second)].push_back({key.first, w});
          rev[static_cast<size_t>(key.first)].push_back({key.second, w});
        }
        g.n_edges_++;
      }
      for (auto& lst : fwd) std::sort(lst.begin(), lst.end());
      for (auto& lst : rev) std::sort(lst.begin(), lst.end());
    }
    return g;
  }

 private:
  void check_id(NodeType t, int id) const {
    if (id < 0 || id >= counts_[static_cast<size_t>(t)])
      throw std::invalid_argument("node id out of range for its type");
  }

  struct RawEdge {
    int src, dst;
    double weight;
  };
  std::array<int, kNumNodeTypes> counts_{};
  std::array<std::vector<RawEdge>, kNumRelations> edges_;
};

// ---------------------------------------------------------------------------
// Construction from logs and entity tables.

struct ClickLogEntry {
  int query_id = 0;
  int ad_id = 0;
  int64_t count = 0;
};

struct QueryRecord {
  int id = 0;
  std::vector<std::string> text;
};

struct KeywordRecord {
  int id = 0;
  int advertiser_id = 0;
  std::vector<std::string> text;
};

struct AdRecord {
  int id = 0;
  int advertiser_id = 0;
};

struct GraphBuildParams {
  int64_t min_support = 1;       // clicks below this never become edges
  int cooccur_top_queries = 20;  // co-click fan-out cap per ad
};

/// Assembles the full seven-relation network. Click edges require
/// min_support; co-occurrence links queries sharing a clicked ad.
inline HetGraph build_graph(const std::vector<ClickLogEntry>& click_log,
                            const std::vector<QueryRecord>& queries,
                            const std::vector<KeywordRecord>& keywords,
                            const std::vector<AdRecord>& ads, int n_advertisers,
                            const GraphBuildParams& params = {}) {
  std::array<int, kNumNodeTypes> counts{};
  counts[static_cast<size_t>(NodeType::kQuery)] = static_cast<int>(queries.size());
  counts[static_cast<size_t>(NodeType::kKeyword)] = static_cast<int>(keywords.size());
  counts[static_cast<size_t>(NodeType::kAd)] = static_cast<int>(ads.size());
  counts[static_cast<size_t>(NodeType::kAdvertiser)] = n_advertisers;
  GraphBuilder b(counts);

  for (size_t i = 0; i < queries.size(); ++i)
    if (queries[i].id != static_cast<int>(i))
      throw std::invalid_argument("query records must be dense by id");
  for (size_t i = 0; i < ads.size(); ++i)
    if (ads[i].id != static_cast<int>(i)) throw std::invalid_argument("ad records must be dense by id");
  for (size_t i = 0; i < keywords.size(); ++i)
    if (keywords[i].id != static_cast<int>(i))
      throw std::invalid_argument("keyword records must be dense by id");

  // query -clicks-> ad, thresholded.
  std::map<std::pair<int, int>, int64_t> clicks;
  for (const auto& e : click_log) {
    if (e.query_id < 0 || e.query_id >= counts[0] || e.ad_id < 0 || e.ad_id >= counts[2])
      throw std::invalid_argument("click log references unknown query or ad");
    clicks[{e.query_id, e.ad_id}] += e.count;
  }
  for (const auto& [key, n] : clicks)
    if (n >= params.min_support)
      b.add_edge(Relation::kQueryClicksAd, key.first, key.second, static_cast<double>(n));

  // query -matches-> keyword: broad containment of keyword terms.
  for (const auto& q : queries) {
    for (const auto& kw : keywords) {
      bool subset = !kw.text.empty();
      for (const auto& t : kw.text)
        if (std::find(q.text.begin(), q.text.end(), t) == q.text.end()) {
          subset = false;
          break;
        }
      if (subset) b.add_edge(Relation::kQueryMatchesKeyword, q.id, kw.id, 1.0);
    }
  }

  // keyword -belongs-> ad and ad -owned_by-> advertiser.
  std::vector<std::vector<int>> ads_of(static_cast<size_t>(n_advertisers));
  for (const auto& ad : ads) {
    if (ad.advertiser_id < 0 || ad.advertiser_id >= n_advertisers)
      throw std::invalid_argument("ad references unknown advertiser");
    ads_of[static_cast<size_t>(ad.advertiser_id)].push_back(ad.id);
    b.add_edge(Relation::kAdOwnedByAdvertiser, ad.id, ad.advertiser_id, 1.0);
  }
  for (const auto& kw : keywords) {
    if (kw.advertiser_id < 0 || kw.advertiser_id >= n_advertisers)
      throw std::invalid_argument("keyword references unknown advertiser");
    for (int ad_id : ads_of[static_cast<size_t>(kw.advertiser_id)])
      b.add_edge(Relation::kKeywordBelongsAd, kw.id, ad_id, 1.0);
  }

  // Sibling relations within an advertiser.
  for (const auto& lst : ads_of)
    for (size_t i = 0; i < lst.size(); ++i)
      for (size_t j = i + 1; j < lst.size(); ++j)
        b.add_edge(Relation::kAdSiblingAd, lst[i], lst[j], 1.0);
  std::vector<std::vector<int>> kws_of(static_cast<size_t>(n_advertisers));
  for (const auto& kw : keywords) kws_of[static_cast<size_t>(kw.advertiser_id)].push_back(kw.id);
  for (const auto& lst : kws_of)
    for (size_t i = 0; i < lst.size(); ++i)
      for (size_t j = i + 1; j < lst.size(); ++j)
        b.add_edge(Relation::kKeywordSiblingKeyword, lst[i], lst[j], 1.0);

  // query -cooccurs-> query via shared clicked ads (fan-out capped).
  std::vector<std::vector<std::pair<int64_t, int>>> clickers(ads.size());
  for (const auto& [key, n] : clicks)
    if (n >= params.min_support) clickers[static_cast<size_t>(key.second)].push_back({n, key.first});
  std::map<std::pair<int, int>, double> co;
  for (auto& lst : clickers) {
    std::sort(lst.begin(), lst.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    const size_t cap = std::min(lst.size(), static_cast<size_t>(params.cooccur_top_queries));
    for (size_t i = 0; i < cap; ++i)
      for (size_t j = i + 1; j < cap; ++j) {
        const int a = std::min(lst[i].second, lst[j].second);
        const int c = std::max(lst[i].second, lst[j].second);
        co[{a, c}] += 1.0;
      }
  }
  for (const auto& [key, w] : co) b.add_edge(Relation::kQueryCooccursQuery, key.first, key.second, w);

  return b.build();
}

// ---------------------------------------------------------------------------
// TSV persistence: src_type src_id edge_type dst_type dst_id weight

inline void save_graph(const HetGraph& g, std::ostream& os) {
  for (int r = 0; r < kNumRelations; ++r) {
    const auto rel = static_cast<Relation>(r);
    const auto sig = relation_sig(rel);
    for (int src = 0; src < g.node_count(sig.src); ++src) {
      for (const auto& [dst, w] : g.neighbors(rel, true, src)) {
        if (sig.undirected && dst < src) continue;  // canonical single row
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", w);
        os << node_type_name(sig.src) << '\t' << src << '\t' << relation_name(rel) << '\t'
           << node_type_name(sig.dst) << '\t' << dst << '\t' << buf << "\n";
      }
    }
  }
}

inline HetGraph load_graph(std::istream& is, std::array<int, kNumNodeTypes> counts) {
  GraphBuilder b(counts);
  std::string src_t, rel, dst_t;
  int src = 0, dst = 0;
  double w = 0.0;
  while (is >> src_t >> src >> rel >> dst_t >> dst >> w) {
    b.add_edge(relation_from_name(rel), NodeRef{node_type_from_name(src_t), src},
               NodeRef{node_type_from_name(dst_t), dst}, w);
  }
  return b.build();
}

}  // namespace adsmarket
