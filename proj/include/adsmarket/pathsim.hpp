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
// Meta-path similarity. Path instances are counted by composing the weighted
// adjacency of each step (a commuting-count product, not sampling); an
// exhaustive DFS enumeration exists in the test suite as the oracle.
//
// Two admissible path shapes:
//  * round-trip palindrome (every step i is the reverse of step L-1-i): both
//    endpoints share a type and the score is the literal
//    s(q,a) = 2*|p(q~>a)| / (|p(q~>q)| + |p(a~>a)|).
//  * alternating palindrome (step i equals step L-1-i, endpoint types
//    differ, e.g. clicks ~clicks clicks): the self-visibility of an endpoint
//    is its count of out-and-back instances (the path followed forward then
//    reversed), giving the same formula with cross-type endpoints. This is
//    what the query -> ad retrieval index uses.
// Anything else is rejected as asymmetric.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "adsmarket/hetgraph.hpp"

namespace adsmarket {

enum class PathShape { kAsymmetric, kRoundTrip, kAlternating };

namespace detail {

inline bool steps_mirror(const MetaPathStep& a, const MetaPathStep& b) {
  if (a.rel != b.rel) return false;
  if (relation_sig(a.rel).undirected) return true;
  return a.forward != b.forward;
}

}  // namespace detail

inline PathShape classify_metapath(const MetaPath& p) {
  p.validate();
  const size_t n = p.steps.size();
  bool round_trip = p.start_type() == p.end_type();
  bool alternating = p.start_type() != p.end_type();
  for (size_t i = 0; i < n; ++i) {
    const auto& a = p.steps[i];
    const auto& b = p.steps[n - 1 - i];
    if (!detail::steps_mirror(a, b)) round_trip = false;
    if (!(a.rel == b.rel && (a.forward == b.forward || relation_sig(a.rel).undirected)))
      alternating = false;
  }
  if (round_trip) return PathShape::kRoundTrip;
  if (alternating) return PathShape::kAlternating;
  return PathShape::kAsymmetric;
}

namespace detail {

/// Row of path-instance counts from a single source node: e_src * A1 * ... * AL.
inline std::vector<double> count_row(const HetGraph& g, const MetaPath& p, int src_id) {
  std::vector<double> cur(static_cast<size_t>(g.node_count(p.start_type())), 0.0);
  cur[static_cast<size_t>(src_id)] = 1.0;
  for (const auto& step : p.steps) {
    std::vector<double> next(static_cast<size_t>(g.node_count(step.to())), 0.0);
    for (size_t u = 0; u < cur.size(); ++u) {
      const double c = cur[u];
      if (c == 0.0) continue;
      for (const auto& [v, w] : g.step_neighbors(step, static_cast<int>(u)))
        next[static_cast<size_t>(v)] += c * w;
    }
    cur = std::move(next);
  }
  return cur;
}

inline MetaPath reversed(const MetaPath& p) {
  MetaPath r;
  for (auto it = p.steps.rbegin(); it != p.steps.rend(); ++it)
    r.steps.push_back({it->rel, !it->forward});
  return r;
}

}  // namespace detail

struct PathSimEntry {
  int node_id = 0;
  double score = 0.0;

  friend bool operator==(const PathSimEntry&, const PathSimEntry&) = default;
};

/// Precomputes the count rows and self-visibilities for every source node of
/// the path's start type. Immutable afterwards; top-k queries are const.
class PathSimIndex {
 public:
  PathSimIndex(const HetGraph& g, const MetaPath& p, int workers = 1) : path_(p) {
    shape_ = classify_metapath(p);
    if (shape_ == PathShape::kAsymmetric)
      throw std::invalid_argument("PathSim requires a symmetric meta-path");
    const int n_src = g.node_count(p.start_type());
    const int n_dst = g.node_count(p.end_type());
    rows_.resize(static_cast<size_t>(n_src));

    // Chunked counting with a deterministic merge order: rows land at fixed
    // indices, so results are independent of the worker count.
    workers = std::max(1, workers);
    auto run_chunk = [&](int lo, int hi) {
      for (int s = lo; s < hi; ++s) rows_[static_cast<size_t>(s)] = detail::count_row(g, p, s);
    };
    if (workers == 1 || n_src < 2 * workers) {
      run_chunk(0, n_src);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (n_src + workers - 1) / workers;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back(run_chunk, std::min(w * chunk, n_src), std::min((w + 1) * chunk, n_src));
      for (auto& t : pool) t.join();
    }

    src_self_.assign(static_cast<size_t>(n_src), 0.0);
    dst_self_.assign(static_cast<size_t>(n_dst), 0.0);
    if (shape_ == PathShape::kRoundTrip) {
      // Same-type endpoints: self-visibility is the diagonal count.
      for (int s = 0; s < n_src; ++s) src_self_[static_cast<size_t>(s)] = rows_[static_cast<size_t>(s)][static_cast<size_t>(s)];
      dst_self_ = src_self_;
    } else {
      // Cross-type endpoints: out-and-back instances, i.e. squared row /
      // column norms of the count matrix.
      for (int s = 0; s < n_src; ++s)
        for (double c : rows_[static_cast<size_t>(s)]) src_self_[static_cast<size_t>(s)] += c * c;
      for (int s = 0; s < n_src; ++s) {
        const auto& row = rows_[static_cast<size_t>(s)];
        for (int a = 0; a < n_dst; ++a) dst_self_[static_cast<size_t>(a)] += row[static_cast<size_t>(a)] * row[static_cast<size_t>(a)];
      }
    }
  }

  PathShape shape() const { return shape_; }
  const MetaPath& path() const { return path_; }
  size_t source_count() const { return rows_.size(); }

  /// Ranked (end-type node, score) list; descending score, ties by node id.
  std::vector<PathSimEntry> topk(int src_id, int k) const {
    if (src_id < 0 || static_cast<size_t>(src_id) >= rows_.size())
      throw std::invalid_argument("pathsim: unknown source node");
    const auto& row = rows_[static_cast<size_t>(src_id)];
    std::vector<PathSimEntry> out;
    for (size_t a = 0; a < row.size(); ++a) {
      if (row[a] == 0.0) continue;
      const double denom = src_self_[static_cast<size_t>(src_id)] + dst_self_[a];
      if (denom <= 0.0) continue;
      out.push_back({static_cast<int>(a), 2.0 * row[a] / denom});
    }
    std::sort(out.begin(), out.end(), [](const PathSimEntry& x, const PathSimEntry& y) {
      if (x.score != y.score) return x.score > y.score;
      return x.node_id < y.node_id;
    });
    if (k >= 0 && out.size() > static_cast<size_t>(k)) out.resize(static_cast<size_t>(k));
    return out;
  }

 private:
  MetaPath path_;
  PathShape shape_ = PathShape::kAsymmetric;
  std::vector<std::vector<double>> rows_;
  std::vector<double> src_self_;
  std::vector<double> dst_self_;
};

/// One-shot top-k; rejects asymmetric paths and unknown source nodes.
inline std::vector<PathSimEntry> pathsim_topk(const HetGraph& g, const MetaPath& p, NodeRef q,
                                              int k) {
  if (q.type != p.start_type())
    throw std::invalid_argument("pathsim: node type does not match meta-path start");
  PathSimIndex index(g, p);
  return index.topk(q.id, k);
}

// ---------------------------------------------------------------------------
// Node key-value index file: "query_id <tab> ad_id:score ad_id:score ..."

inline void save_pathsim_index(const PathSimIndex& index, int k, std::ostream& os) {
  for (size_t s = 0; s < index.source_count(); ++s) {
    const auto entries = index.topk(static_cast<int>(s), k);
    if (entries.empty()) continue;
    os << s << '\t';
    for (size_t i = 0; i < entries.size(); ++i) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%s%d:%.12g", i ? " " : "", entries[i].node_id,
                    entries[i].score);
      os << buf;
    }
    os << "\n";
  }
}

inline std::map<int, std::vector<PathSimEntry>> load_pathsim_index(std::istream& is) {
  std::map<int, std::vector<PathSimEntry>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("bad pathsim index line");
    const int qid = std::stoi(line.substr(0, tab));
    std::istringstream rest(line.substr(tab + 1));
    std::string cell;
    auto& lst = out[qid];
    while (rest >> cell) {
      const auto colon = cell.find(':');
      lst.push_back({std::stoi(cell.substr(0, colon)), std::stod(cell.substr(colon + 1))});
    }
  }
  return out;
}

}  // namespace adsmarket
