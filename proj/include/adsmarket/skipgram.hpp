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
// Heterogeneous skip-gram with negative sampling. Negatives for a context
// node of type t are drawn only from nodes of type t, from a unigram^(3/4)
// table. One shared embedding matrix per node type; term vectors live in the
// same table and are pre-trained by the same routine over document text.

#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adsmarket/hetgraph.hpp"
#include "adsmarket/rng.hpp"

namespace adsmarket {

/// Raised when a node has no attribute term with a known vector.
struct ColdFeatureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SkipgramConfig {
  int dim = 64;
  int window = 5;
  int negatives = 5;  // M
  int epochs = 3;
  double lr = 0.025;
  double neg_exponent = 0.75;
};

/// Latent vectors for graph nodes and for vocabulary terms, plus the
/// per-type negative-sampling tables the trainer used.
struct EmbeddingTable {
  int dim = 0;
  std::array<std::vector<double>, kNumNodeTypes> node_vecs;  // row-major [id*dim]
  std::array<std::vector<double>, kNumNodeTypes> neg_cdf;    // per-type cumulative P_t
  std::vector<std::string> term_vocab;
  std::map<std::string, int> term_index;
  std::vector<double> term_vecs;

  int node_count(NodeType t) const {
    return dim > 0 ? static_cast<int>(node_vecs[static_cast<size_t>(t)].size()) / dim : 0;
  }
  bool has_node(NodeRef n) const { return n.id >= 0 && n.id < node_count(n.type); }

  std::span<const double> node_vec(NodeType t, int id) const {
    return {node_vecs[static_cast<size_t>(t)].data() + static_cast<size_t>(id) * dim,
            static_cast<size_t>(dim)};
  }
  std::span<double> node_vec_mut(NodeType t, int id) {
    return {node_vecs[static_cast<size_t>(t)].data() + static_cast<size_t>(id) * dim,
            static_cast<size_t>(dim)};
  }
  int term_id(const std::string& term) const {
    auto it = term_index.find(term);
    return it == term_index.end() ? -1 : it->second;
  }
  std::span<const double> term_vec(int tid) const {
    return {term_vecs.data() + static_cast<size_t>(tid) * dim, static_cast<size_t>(dim)};
  }
};

/// Transductive lookup; throws for nodes outside the trained table.
inline std::vector<double> embed_node(const EmbeddingTable& table, NodeRef n) {
  if (!table.has_node(n)) throw std::invalid_argument("embed_node: node not in table");
  const auto v = table.node_vec(n.type, n.id);
  return {v.begin(), v.end()};
}

/// Mean of the node's known term vectors (the attribute composition
/// W_i = average(w_t1..w_tn)). No known term -> ColdFeatureError.
inline std::vector<double> node_features_from_terms(const std::vector<std::string>& terms,
                                                    const EmbeddingTable& table) {
  std::vector<double> out(static_cast<size_t>(table.dim), 0.0);
  int known = 0;
  for (const auto& t : terms) {
    const int tid = table.term_id(t);
    if (tid < 0) continue;
    const auto v = table.term_vec(tid);
    for (int d = 0; d < table.dim; ++d) out[static_cast<size_t>(d)] += v[static_cast<size_t>(d)];
    ++known;
  }
  if (known == 0) throw ColdFeatureError("node has no term with a known vector");
  for (auto& x : out) x /= known;
  return out;
}

namespace detail {

inline double sg_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline int sample_from_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform01();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min(cdf.size() - 1,
                                   static_cast<size_t>(it - cdf.begin())));
}

/// One SGNS ascent update on (center, context) with M sampled negatives of
/// the context's type.
inline void sgns_update(std::span<double> center, std::span<double> context,
                        const std::vector<std::vector<double*>>& type_rows,
                        const std::vector<std::vector<double>>& type_cdf, int context_type,
                        int negatives, double lr, Rng& rng, std::vector<double>& scratch) {
  const int dim = static_cast<int>(center.size());
  if (center.data() == context.data()) return;  // same node at both positions
  scratch.assign(static_cast<size_t>(dim), 0.0);

  double z = 0.0;
  for (int d = 0; d < dim; ++d) z += center[static_cast<size_t>(d)] * context[static_cast<size_t>(d)];
  const double g_pos = lr * (1.0 - sg_sigmoid(z));
  for (int d = 0; d < dim; ++d) {
    scratch[static_cast<size_t>(d)] += g_pos * context[static_cast<size_t>(d)];
    context[static_cast<size_t>(d)] += g_pos * center[static_cast<size_t>(d)];
  }
  const auto& rows = type_rows[static_cast<size_t>(context_type)];
  const auto& cdf = type_cdf[static_cast<size_t>(context_type)];
  for (int m = 0; m < negatives; ++m) {
    double* neg = rows[static_cast<size_t>(sample_from_cdf(cdf, rng))];
    if (neg == center.data()) continue;  // node drawn as its own negative
    double zn = 0.0;
    for (int d = 0; d < dim; ++d) zn += center[static_cast<size_t>(d)] * neg[d];
    const double g_neg = -lr * sg_sigmoid(zn);
    for (int d = 0; d < dim; ++d) {
      scratch[static_cast<size_t>(d)] += g_neg * neg[d];
      neg[d] += g_neg * center[static_cast<size_t>(d)];
    }
  }
  for (int d = 0; d < dim; ++d) center[static_cast<size_t>(d)] += scratch[static_cast<size_t>(d)];
}

}  // namespace detail

/// Trains node vectors over a meta-path walk corpus. Deterministic under a
/// fixed rng seed; requires a non-empty corpus and dim >= 2.
inline EmbeddingTable train_skipgram(const std::vector<std::vector<NodeRef>>& corpus,
                                     const std::array<int, kNumNodeTypes>& node_counts,
                                     const SkipgramConfig& cfg, Rng& rng) {
  if (corpus.empty()) throw std::invalid_argument("train_skipgram: empty corpus");
  if (cfg.dim < 2) throw std::invalid_argument("train_skipgram: dim must be >= 2");
  if (cfg.negatives < 1) throw std::invalid_argument("train_skipgram: need at least one negative");

  EmbeddingTable table;
  table.dim = cfg.dim;
  for (int t = 0; t < kNumNodeTypes; ++t) {
    table.node_vecs[static_cast<size_t>(t)].resize(
        static_cast<size_t>(node_counts[static_cast<size_t>(t)]) * cfg.dim);
    for (auto& x : table.node_vecs[static_cast<size_t>(t)])
      x = rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim);
  }

  // Unigram^exponent negative-sampling distribution, per node type.
  std::array<std::vector<double>, kNumNodeTypes> counts;
  for (int t = 0; t < kNumNodeTypes; ++t)
    counts[static_cast<size_t>(t)].assign(static_cast<size_t>(node_counts[static_cast<size_t>(t)]), 0.0);
  for (const auto& walk : corpus)
    for (const auto& n : walk) {
      if (!table.has_node(n)) throw std::invalid_argument("corpus node outside declared counts");
      counts[static_cast<size_t>(n.type)][static_cast<size_t>(n.id)] += 1.0;
    }
  std::vector<std::vector<double*>> type_rows(kNumNodeTypes);
  std::vector<std::vector<double>> type_cdf(kNumNodeTypes);
  for (int t = 0; t < kNumNodeTypes; ++t) {
    double total = 0.0;
    auto& cdf = type_cdf[static_cast<size_t>(t)];
    auto& rows = type_rows[static_cast<size_t>(t)];
    std::vector<double> probs;
    for (size_t id = 0; id < counts[static_cast<size_t>(t)].size(); ++id) {
      const double c = counts[static_cast<size_t>(t)][id];
      if (c <= 0.0) continue;
      probs.push_back(std::pow(c, cfg.neg_exponent));
      rows.push_back(table.node_vecs[static_cast<size_t>(t)].data() + id * static_cast<size_t>(cfg.dim));
      total += probs.back();
    }
    double acc = 0.0;
    cdf.reserve(probs.size());
    table.neg_cdf[static_cast<size_t>(t)].clear();
    for (double p : probs) {
      acc += p / total;
      cdf.push_back(acc);
      table.neg_cdf[static_cast<size_t>(t)].push_back(acc);
    }
    if (!cdf.empty()) cdf.back() = 1.0;
  }

  std::vector<double> scratch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& walk : corpus) {
      const int n = static_cast<int>(walk.size());
      for (int i = 0; i < n; ++i) {
        for (int j = std::max(0, i - cfg.window); j <= std::min(n - 1, i + cfg.window); ++j) {
          if (j == i) continue;
          const auto& center = walk[static_cast<size_t>(i)];
          const auto& context = walk[static_cast<size_t>(j)];
          if (type_rows[static_cast<size_t>(context.type)].empty()) continue;
          detail::sgns_update(table.node_vec_mut(center.type, center.id),
                              table.node_vec_mut(context.type, context.id), type_rows, type_cdf,
                              static_cast<int>(context.type), cfg.negatives, cfg.lr, rng, scratch);
        }
      }
    }
  }
  return table;
}

/// Unsupervised term pre-training over token sequences; fills the term side
/// of an EmbeddingTable.
inline void train_term_embeddings(EmbeddingTable& table,
                                  const std::vector<std::vector<std::string>>& documents,
                                  const SkipgramConfig& cfg, Rng& rng) {
  if (documents.empty()) throw std::invalid_argument("train_term_embeddings: empty corpus");
  if (cfg.dim < 2) throw std::invalid_argument("train_term_embeddings: dim must be >= 2");
  table.dim = cfg.dim;
  table.term_vocab.clear();
  table.term_index.clear();
  for (const auto& doc : documents)
    for (const auto& t : doc)
      if (table.term_index.emplace(t, static_cast<int>(table.term_vocab.size())).second)
        table.term_vocab.push_back(t);
  table.term_vecs.resize(table.term_vocab.size() * static_cast<size_t>(cfg.dim));
  for (auto& x : table.term_vecs) x = rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim);

  std::vector<double> freq(table.term_vocab.size(), 0.0);
  for (const auto& doc : documents)
    for (const auto& t : doc) freq[static_cast<size_t>(table.term_index.at(t))] += 1.0;
  std::vector<std::vector<double*>> rows(1);
  std::vector<std::vector<double>> cdf(1);
  double total = 0.0;
  std::vector<double> probs(freq.size());
  for (size_t i = 0; i < freq.size(); ++i) {
    probs[i] = std::pow(freq[i], cfg.neg_exponent);
    rows[0].push_back(table.term_vecs.data() + i * static_cast<size_t>(cfg.dim));
    total += probs[i];
  }
  double acc = 0.0;
  for (double p : probs) {
    acc += p / total;
    cdf[0].push_back(acc);
  }
  if (!cdf[0].empty()) cdf[0].back() = 1.0;

  std::vector<double> scratch;
  auto row = [&](int tid) {
    return std::span<double>(table.term_vecs.data() + static_cast<size_t>(tid) * cfg.dim,
                             static_cast<size_t>(cfg.dim));
  };
  for (int epoch = 0; epoch < cfg.epochs; ++epoch)
    for (const auto& doc : documents) {
      const int n = static_cast<int>(doc.size());
      for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - cfg.window); j <= std::min(n - 1, i + cfg.window); ++j) {
          if (j == i) continue;
          detail::sgns_update(row(table.term_index.at(doc[static_cast<size_t>(i)])),
                              row(table.term_index.at(doc[static_cast<size_t>(j)])), rows, cdf, 0,
                              cfg.negatives, cfg.lr, rng, scratch);
        }
    }
}

/// The Eq.-style sampled objective with the expectation over negatives taken
/// exactly; test-scale helper for the improves-over-epochs property.
inline double skipgram_objective(const EmbeddingTable& table,
                                 const std::vector<std::vector<NodeRef>>& corpus, int window,
                                 int negatives) {
  // Reconstruct per-type participant lists in the same order as training.
  std::array<std::vector<int>, kNumNodeTypes> ids;
  std::array<std::vector<double>, kNumNodeTypes> seen;
  for (int t = 0; t < kNumNodeTypes; ++t)
    seen[static_cast<size_t>(t)].assign(static_cast<size_t>(table.node_count(static_cast<NodeType>(t))), 0.0);
  for (const auto& walk : corpus)
    for (const auto& n : walk) seen[static_cast<size_t>(n.type)][static_cast<size_t>(n.id)] += 1.0;
  for (int t = 0; t < kNumNodeTypes; ++t)
    for (size_t id = 0; id < seen[static_cast<size_t>(t)].size(); ++id)
      if (seen[static_cast<size_t>(t)][id] > 0.0) ids[static_cast<size_t>(t)].push_back(static_cast<int>(id));

  double objective = 0.0;
  for (const auto& walk : corpus) {
    const int n = static_cast<int>(walk.size());
    for (int i = 0; i < n; ++i)
      for (int j = std::max(0, i - window); j <= std::min(n - 1, i + window); ++j) {
        if (j == i) continue;
        const auto xv = table.node_vec(walk[static_cast<size_t>(i)].type, walk[static_cast<size_t>(i)].id);
        const auto xc = table.node_vec(walk[static_cast<size_t>(j)].type, walk[static_cast<size_t>(j)].id);
        double z = 0.0;
        for (int d = 0; d < table.dim; ++d) z += xv[static_cast<size_t>(d)] * xc[static_cast<size_t>(d)];
        objective += std::log(detail::sg_sigmoid(z) + 1e-300);
        const int t = static_cast<int>(walk[static_cast<size_t>(j)].type);
        const auto& cdf = table.neg_cdf[static_cast<size_t>(t)];
        double expectation = 0.0;
        double prev = 0.0;
        for (size_t u = 0; u < ids[static_cast<size_t>(t)].size(); ++u) {
          const double p = cdf[u] - prev;
          prev = cdf[u];
          const auto xu = table.node_vec(static_cast<NodeType>(t), ids[static_cast<size_t>(t)][u]);
          double zu = 0.0;
          for (int d = 0; d < table.dim; ++d) zu += xv[static_cast<size_t>(d)] * xu[static_cast<size_t>(d)];
          expectation += p * std::log(detail::sg_sigmoid(-zu) + 1e-300);
        }
        objective += negatives * expectation;
      }
  }
  return objective;
}

// ---------------------------------------------------------------------------
// Persistence: "node <type> <id> <d> v1..vd" and "term <term> <d> v1..vd".

inline void save_embeddings(const EmbeddingTable& table, std::ostream& os) {
  char buf[40];
  for (int t = 0; t < kNumNodeTypes; ++t) {
    const auto type = static_cast<NodeType>(t);
    for (int id = 0; id < table.node_count(type); ++id) {
      os << "node " << node_type_name(type) << ' ' << id << ' ' << table.dim;
      for (double v : table.node_vec(type, id)) {
        std::snprintf(buf, sizeof(buf), " %.17g", v);
        os << buf;
      }
      os << "\n";
    }
  }
  for (size_t i = 0; i < table.term_vocab.size(); ++i) {
    os << "term " << table.term_vocab[i] << ' ' << table.dim;
    for (double v : table.term_vec(static_cast<int>(i))) {
      std::snprintf(buf, sizeof(buf), " %.17g", v);
      os << buf;
    }
    os << "\n";
  }
}

inline EmbeddingTable load_embeddings(std::istream& is) {
  EmbeddingTable table;
  std::string kind;
  std::array<std::map<int, std::vector<double>>, kNumNodeTypes> rows;
  while (is >> kind) {
    int d = 0;
    if (kind == "node") {
      std::string type_name;
      int id = 0;
      is >> type_name >> id >> d;
      table.dim = d;
      std::vector<double> v(static_cast<size_t>(d));
      for (auto& x : v) is >> x;
      rows[static_cast<size_t>(node_type_from_name(type_name))][id] = std::move(v);
    } else if (kind == "term") {
      std::string term;
      is >> term >> d;
      table.dim = d;
      table.term_index[term] = static_cast<int>(table.term_vocab.size());
      table.term_vocab.push_back(term);
      const size_t base = table.term_vecs.size();
      table.term_vecs.resize(base + static_cast<size_t>(d));
      for (size_t i = 0; i < static_cast<size_t>(d); ++i) is >> table.term_vecs[base + i];
    } else {
      throw std::runtime_error("bad embedding row kind: " + kind);
    }
  }
  for (int t = 0; t < kNumNodeTypes; ++t) {
    const auto& m = rows[static_cast<size_t>(t)];
    if (m.empty()) continue;
    const int max_id = m.rbegin()->first;
    table.node_vecs[static_cast<size_t>(t)].assign(
        static_cast<size_t>(max_id + 1) * static_cast<size_t>(table.dim), 0.0);
    for (const auto& [id, v] : m)
      std::copy(v.begin(), v.end(),
                table.node_vecs[static_cast<size_t>(t)].begin() + static_cast<size_t>(id) * table.dim);
  }
  return table;
}

}  // namespace adsmarket
