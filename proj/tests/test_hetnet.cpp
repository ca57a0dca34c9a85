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

#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "adsmarket/hetgraph.hpp"
#include "adsmarket/pathsim.hpp"
#include "adsmarket/walks.hpp"
#include "oracles.hpp"

using namespace adsmarket;

namespace {

std::vector<QueryRecord> make_queries(int n) {
  std::vector<QueryRecord> out;
  for (int i = 0; i < n; ++i) out.push_back({i, {"t" + std::to_string(i)}});
  return out;
}

std::vector<KeywordRecord> make_keywords(int n, int n_advertisers) {
  std::vector<KeywordRecord> out;
  for (int i = 0; i < n; ++i) out.push_back({i, i % n_advertisers, {"t" + std::to_string(i)}});
  return out;
}

std::vector<AdRecord> make_ads(int n, int n_advertisers) {
  std::vector<AdRecord> out;
  for (int i = 0; i < n; ++i) out.push_back({i, i % n_advertisers});
  return out;
}

/// Random typed graph over clicks / matches / belongs / cooccurs with small
/// integer weights.
HetGraph random_graph(Rng& rng, int n_query, int n_ad, int n_keyword) {
  std::array<int, kNumNodeTypes> counts{};
  counts[static_cast<size_t>(NodeType::kQuery)] = n_query;
  counts[static_cast<size_t>(NodeType::kKeyword)] = n_keyword;
  counts[static_cast<size_t>(NodeType::kAd)] = n_ad;
  counts[static_cast<size_t>(NodeType::kAdvertiser)] = std::max(1, n_ad / 2);
  GraphBuilder b(counts);
  const int n_click = n_query * 2 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_query * 2 + 1)));
  for (int e = 0; e < n_click; ++e)
    b.add_edge(Relation::kQueryClicksAd, static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_query))),
               static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_ad))),
               1.0 + static_cast<double>(rng.uniform_int(3)));
  for (int e = 0; e < n_query; ++e)
    b.add_edge(Relation::kQueryCooccursQuery,
               static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_query))),
               static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_query))),
               1.0 + static_cast<double>(rng.uniform_int(2)));
  for (int e = 0; e < n_keyword; ++e) {
    b.add_edge(Relation::kQueryMatchesKeyword,
               static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_query))), e, 1.0);
    b.add_edge(Relation::kKeywordBelongsAd, e,
               static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_ad))), 1.0);
  }
  return b.build();
}

}  // namespace

TEST(build_graph, empty_log_keeps_nodes_without_click_edges) {
  const auto g = build_graph({}, make_queries(4), make_keywords(3, 2), make_ads(3, 2), 2);
  EXPECT_EQ(g.node_count(NodeType::kQuery), 4);
  EXPECT_EQ(g.node_count(NodeType::kAd), 3);
  for (int q = 0; q < 4; ++q)
    EXPECT_TRUE(g.neighbors(Relation::kQueryClicksAd, true, q).empty());
  // Ownership and sibling relations still exist.
  EXPECT_FALSE(g.neighbors(Relation::kAdOwnedByAdvertiser, true, 0).empty());
}

TEST(build_graph, network_snippet_has_cross_query_path_to_ad) {
  // Rebuild the multi-relational snippet: query1 co-occurs with query4 which
  // clicked ad1, so the path query1 -> query4 -> ad1 exists.
  std::array<int, kNumNodeTypes> counts{};
  counts[static_cast<size_t>(NodeType::kQuery)] = 5;
  counts[static_cast<size_t>(NodeType::kAd)] = 5;
  counts[static_cast<size_t>(NodeType::kKeyword)] = 1;
  counts[static_cast<size_t>(NodeType::kAdvertiser)] = 1;
  GraphBuilder b(counts);
  b.add_edge(Relation::kQueryCooccursQuery, 1, 4, 1.0);
  b.add_edge(Relation::kQueryClicksAd, 4, 1, 1.0);
  const auto g = b.build();

  const MetaPath p = MetaPath::parse("cooccurs clicks");
  bool found = false;
  for (const auto& [q4, w1] : g.step_neighbors(p.steps[0], 1))
    for (const auto& [ad, w2] : g.step_neighbors(p.steps[1], q4)) found = found || ad == 1;
  EXPECT_TRUE(found);
}

TEST(build_graph, click_below_min_support_is_absent) {
  GraphBuildParams params;
  params.min_support = 3;
  const auto g = build_graph({{0, 0, 2}, {1, 1, 3}}, make_queries(2), make_keywords(1, 1),
                             make_ads(2, 1), 1, params);
  EXPECT_TRUE(g.neighbors(Relation::kQueryClicksAd, true, 0).empty());
  EXPECT_EQ(g.neighbors(Relation::kQueryClicksAd, true, 1).size(), 1u);
}

TEST(build_graph, rejects_dangling_references) {
  EXPECT_THROW(build_graph({{9, 0, 1}}, make_queries(2), make_keywords(1, 1), make_ads(1, 1), 1),
               std::invalid_argument);
}

TEST(graph_builder, rejects_mistyped_edges) {
  std::array<int, kNumNodeTypes> counts{2, 2, 2, 2};
  GraphBuilder b(counts);
  // query-clicks-ad with a keyword-typed source must be rejected.
  EXPECT_THROW(
      b.add_edge(Relation::kQueryClicksAd, NodeRef{NodeType::kKeyword, 0}, NodeRef{NodeType::kAd, 0}, 1.0),
      std::invalid_argument);
  EXPECT_THROW(b.add_edge(Relation::kQueryClicksAd, 0, 5, 1.0), std::invalid_argument);
  EXPECT_THROW(b.add_edge(Relation::kQueryClicksAd, 0, 1, 0.0), std::invalid_argument);
  // Property-style sweep: an edge with a wrong-typed endpoint never builds.
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rel = static_cast<Relation>(rng.uniform_int(kNumRelations));
    const auto sig = relation_sig(rel);
    NodeRef src{sig.src, 0}, dst{sig.dst, 0};
    // Corrupt one endpoint type.
    if (rng.bernoulli(0.5))
      src.type = static_cast<NodeType>((static_cast<int>(sig.src) + 1) % kNumNodeTypes);
    else
      dst.type = static_cast<NodeType>((static_cast<int>(sig.dst) + 1) % kNumNodeTypes);
    EXPECT_THROW(b.add_edge(rel, src, dst, 1.0), std::invalid_argument);
  }
}

TEST(graph_file, tsv_round_trip) {
  Rng rng(2);
  const auto g = random_graph(rng, 8, 6, 4);
  std::stringstream s;
  save_graph(g, s);
  std::array<int, kNumNodeTypes> counts{};
  for (int t = 0; t < kNumNodeTypes; ++t)
    counts[static_cast<size_t>(t)] = g.node_count(static_cast<NodeType>(t));
  const auto g2 = load_graph(s, counts);
  EXPECT_EQ(g2.edge_count(), g.edge_count());
  for (int q = 0; q < g.node_count(NodeType::kQuery); ++q)
    EXPECT_EQ(g.neighbors(Relation::kQueryClicksAd, true, q),
              g2.neighbors(Relation::kQueryClicksAd, true, q));
}

TEST(metapath, classification_and_rejection) {
  EXPECT_EQ(classify_metapath(MetaPath::parse("clicks ~clicks")), PathShape::kRoundTrip);
  EXPECT_EQ(classify_metapath(MetaPath::parse("cooccurs")), PathShape::kRoundTrip);
  EXPECT_EQ(classify_metapath(MetaPath::parse("clicks ~clicks clicks")), PathShape::kAlternating);
  EXPECT_EQ(classify_metapath(MetaPath::parse("clicks")), PathShape::kAlternating);
  EXPECT_EQ(classify_metapath(MetaPath::parse("matches belongs")), PathShape::kAsymmetric);
  EXPECT_THROW(MetaPath::parse("clicks belongs"), std::invalid_argument);  // type mismatch
}

TEST(pathsim, self_similarity_is_one) {
  Rng rng(5);
  const auto g = random_graph(rng, 10, 8, 4);
  const MetaPath p = MetaPath::parse("clicks ~clicks");
  for (int q = 0; q < 10; ++q) {
    const auto top = pathsim_topk(g, p, NodeRef{NodeType::kQuery, q}, -1);
    if (top.empty()) continue;  // no path instances at all
    // The node itself ranks first with score exactly 1.
    EXPECT_EQ(top.front().node_id, q);
    EXPECT_DOUBLE_EQ(top.front().score, 1.0);
  }
}

TEST(pathsim, isolated_node_gives_empty_list) {
  std::array<int, kNumNodeTypes> counts{3, 1, 2, 1};
  GraphBuilder b(counts);
  b.add_edge(Relation::kQueryClicksAd, 0, 0, 1.0);
  const auto g = b.build();
  const auto top = pathsim_topk(g, MetaPath::parse("clicks ~clicks clicks"), NodeRef{NodeType::kQuery, 2}, 5);
  EXPECT_TRUE(top.empty());
}

TEST(pathsim, rejects_asymmetric_paths_and_wrong_anchor) {
  Rng rng(6);
  const auto g = random_graph(rng, 6, 5, 3);
  EXPECT_THROW(pathsim_topk(g, MetaPath::parse("matches belongs"), NodeRef{NodeType::kQuery, 0}, 3),
               std::invalid_argument);
  EXPECT_THROW(pathsim_topk(g, MetaPath::parse("clicks"), NodeRef{NodeType::kAd, 0}, 3),
               std::invalid_argument);
}

TEST(pathsim, matches_exhaustive_enumeration_on_random_graphs) {
  Rng rng(81);
  const std::vector<std::string> paths = {"clicks ~clicks", "clicks ~clicks clicks", "clicks",
                                          "cooccurs clicks", "~clicks cooccurs clicks"};
  for (int trial = 0; trial < 12; ++trial) {
    const auto g = random_graph(rng, 6 + static_cast<int>(rng.uniform_int(6)),
                                5 + static_cast<int>(rng.uniform_int(5)), 4);
    for (const auto& spec : paths) {
      const MetaPath p = MetaPath::parse(spec);
      if (classify_metapath(p) == PathShape::kAsymmetric) continue;
      const int n_src = g.node_count(p.start_type());
      for (int src = 0; src < n_src; ++src) {
        const auto got = pathsim_topk(g, p, NodeRef{p.start_type(), src}, 10);
        const auto want = oracle::pathsim_by_enumeration(g, p, src, 10);
        ASSERT_EQ(got.size(), want.size()) << spec << " src " << src;
        for (size_t i = 0; i < got.size(); ++i) {
          EXPECT_EQ(got[i].node_id, want[i].node_id) << spec << " src " << src << " rank " << i;
          EXPECT_NEAR(got[i].score, want[i].score, 1e-12);
        }
      }
    }
  }
}

TEST(pathsim, symmetric_scores_and_range) {
  Rng rng(19);
  for (int trial = 0; trial < 6; ++trial) {
    const auto g = random_graph(rng, 8, 6, 3);
    const MetaPath p = MetaPath::parse("clicks ~clicks clicks");
    // s(q, a) computed from q equals s(a, q) computed from a over the
    // reversed path; scores stay within [0, 1].
    MetaPath rev;
    for (auto it = p.steps.rbegin(); it != p.steps.rend(); ++it) rev.steps.push_back({it->rel, !it->forward});
    PathSimIndex fwd_index(g, p);
    PathSimIndex rev_index(g, rev);
    for (int q = 0; q < g.node_count(NodeType::kQuery); ++q) {
      for (const auto& [a, score] : fwd_index.topk(q, -1)) {
        EXPECT_GE(score, 0.0);
        EXPECT_LE(score, 1.0 + 1e-12);
        double back = -1.0;
        for (const auto& [qq, s2] : rev_index.topk(a, -1))
          if (qq == q) back = s2;
        EXPECT_NEAR(score, back, 1e-12);
      }
    }
  }
}

TEST(pathsim, worker_count_does_not_change_results) {
  Rng rng(23);
  const auto g = random_graph(rng, 20, 12, 5);
  const MetaPath p = MetaPath::parse("clicks ~clicks clicks");
  PathSimIndex one(g, p, 1);
  PathSimIndex four(g, p, 4);
  for (int q = 0; q < g.node_count(NodeType::kQuery); ++q)
    EXPECT_EQ(one.topk(q, 10), four.topk(q, 10));
}

TEST(metapath_walks, isolated_node_walk_has_length_one) {
  std::array<int, kNumNodeTypes> counts{2, 1, 1, 1};
  GraphBuilder b(counts);
  b.add_edge(Relation::kQueryClicksAd, 0, 0, 1.0);
  const auto g = b.build();
  Rng rng(1);
  const auto corpus = metapath_walks(g, MetaPath::parse("clicks ~clicks"), 2, 10, rng);
  // Query 1 is isolated: both of its walks stop immediately.
  int isolated_walks = 0;
  for (const auto& walk : corpus)
    if (walk.front() == NodeRef{NodeType::kQuery, 1}) {
      EXPECT_EQ(walk.size(), 1u);
      isolated_walks++;
    }
  EXPECT_EQ(isolated_walks, 2);
}

TEST(metapath_walks, forced_transitions_are_deterministic) {
  std::array<int, kNumNodeTypes> counts{1, 1, 1, 1};
  GraphBuilder b(counts);
  b.add_edge(Relation::kQueryClicksAd, 0, 0, 1.0);
  const auto g = b.build();
  Rng rng(9);
  const auto corpus = metapath_walks(g, MetaPath::parse("clicks"), 1, 6, rng);
  ASSERT_EQ(corpus.size(), 1u);
  const std::vector<NodeRef> expect = {{NodeType::kQuery, 0}, {NodeType::kAd, 0},
                                       {NodeType::kQuery, 0}, {NodeType::kAd, 0},
                                       {NodeType::kQuery, 0}, {NodeType::kAd, 0}};
  EXPECT_EQ(corpus.front(), expect);
}

TEST(metapath_walks, types_follow_the_pattern_cyclically) {
  Rng rng(4);
  const auto g = random_graph(rng, 8, 6, 4);
  const MetaPath p = MetaPath::parse("clicks ~clicks");
  const auto corpus = metapath_walks(g, p, 3, 15, rng);
  for (const auto& walk : corpus)
    for (size_t i = 0; i < walk.size(); ++i)
      EXPECT_EQ(walk[i].type, i % 2 == 0 ? NodeType::kQuery : NodeType::kAd);
}

TEST(metapath_walks, hub_transition_frequencies_track_edge_weights) {
  std::array<int, kNumNodeTypes> counts{1, 1, 3, 1};
  GraphBuilder b(counts);
  b.add_edge(Relation::kQueryClicksAd, 0, 0, 1.0);
  b.add_edge(Relation::kQueryClicksAd, 0, 1, 2.0);
  b.add_edge(Relation::kQueryClicksAd, 0, 2, 5.0);
  const auto g = b.build();
  Rng rng(44);
  const auto corpus = metapath_walks(g, MetaPath::parse("clicks"), 100000, 2, rng);
  std::map<int, int> hits;
  for (const auto& walk : corpus) {
    ASSERT_EQ(walk.size(), 2u);
    hits[walk[1].id]++;
  }
  const double total = 100000.0;
  EXPECT_NEAR(hits[0] / total, 1.0 / 8.0, 0.02);
  EXPECT_NEAR(hits[1] / total, 2.0 / 8.0, 0.02);
  EXPECT_NEAR(hits[2] / total, 5.0 / 8.0, 0.02);
}
