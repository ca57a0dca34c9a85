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
// Inductive node representations: bottom-up aggregation guided by meta-paths,
// one shared weight matrix per (path, hop), term-composed leaf features, and
// a linear scorer p = sigmoid(F(W_q, W_a)) trained on clicked / unclicked
// query-ad pairs. Works for nodes outside the trained embedding table as long
// as they carry known terms.

#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "adsmarket/hetgraph.hpp"
#include "adsmarket/rng.hpp"
#include "adsmarket/skipgram.hpp"

namespace adsmarket {

using NodeTermsFn = std::function<std::vector<std::string>(NodeRef)>;

struct AggregatorConfig {
  int hidden_dim = 16;
  double lr = 0.05;
  int epochs = 15;
  int fanout_cap = 25;     // neighbors per hop, id-ascending
  double holdout = 0.2;
  bool finetune_terms = true;
};

namespace detail {

struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  void init(int r, int c) {
    rows = r;
    cols = c;
    a.assign(static_cast<size_t>(r) * c, 0.0);
  }
  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  std::vector<double> mul(const std::vector<double>& x) const {
    std::vector<double> y(static_cast<size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
      double s = 0.0;
      for (int c = 0; c < cols; ++c) s += at(r, c) * x[static_cast<size_t>(c)];
      y[static_cast<size_t>(r)] = s;
    }
    return y;
  }
  std::vector<double> tmul(const std::vector<double>& g) const {
    std::vector<double> y(static_cast<size_t>(cols), 0.0);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) y[static_cast<size_t>(c)] += at(r, c) * g[static_cast<size_t>(r)];
    return y;
  }
};

}  // namespace detail

class AggregatorModel {
 public:
  AggregatorModel() = default;

  AggregatorModel(int in_dim, int hidden_dim, std::vector<MetaPath> query_paths,
                  std::vector<MetaPath> ad_paths)
      : in_dim_(in_dim), hidden_(hidden_dim), paths_{std::move(query_paths), std::move(ad_paths)} {
    for (const auto& p : paths_[0])
      if (p.start_type() != NodeType::kQuery)
        throw std::invalid_argument("query-side meta-path must start at a query node");
    for (const auto& p : paths_[1])
      if (p.start_type() != NodeType::kAd)
        throw std::invalid_argument("ad-side meta-path must start at an ad node");
    if (paths_[0].empty() || paths_[1].empty())
      throw std::invalid_argument("aggregator needs at least one meta-path per side");
    for (int side = 0; side < 2; ++side) {
      weights_[side].resize(paths_[side].size());
      biases_[side].resize(paths_[side].size());
      for (size_t p = 0; p < paths_[side].size(); ++p) {
        const size_t m = paths_[side][p].length();
        weights_[side][p].resize(m);
        biases_[side][p].resize(m);
        for (size_t k = 0; k < m; ++k) {
          const int child_dim = (k + 1 == m) ? in_dim_ : hidden_;
          weights_[side][p][k].init(hidden_, in_dim_ + child_dim);
          biases_[side][p][k].assign(static_cast<size_t>(hidden_), 0.0);
        }
      }
    }
    scorer_w_.assign(static_cast<size_t>(2 * hidden_), 0.0);
    scorer_b_ = 0.0;
  }

  void init_random(Rng& rng, double scale = 0.2) {
    for (int side = 0; side < 2; ++side)
      for (auto& per_path : weights_[side])
        for (auto& w : per_path)
          for (auto& x : w.a) x = rng.uniform(-scale, scale);
    for (auto& x : scorer_w_) x = rng.uniform(-scale, scale);
  }

  int in_dim() const { return in_dim_; }
  int hidden_dim() const { return hidden_; }
  const std::vector<MetaPath>& paths(NodeType anchor) const { return paths_[side_of(anchor)]; }

  /// Layer weights are shared across all nodes at the same hop by
  /// construction; this is the total parameter count that implies.
  size_t parameter_count() const { return pack().size(); }

  // -- forward ---------------------------------------------------------------

  /// Bottom-up meta-path-guided embedding of a node (mean over its side's
  /// paths). Inductive: unknown graph ids simply have no neighbors.
  std::vector<double> embed(const HetGraph& g, const EmbeddingTable& terms,
                            const NodeTermsFn& node_terms, NodeRef anchor, int fanout_cap) const {
    const int side = side_of(anchor.type);
    std::vector<double> acc(static_cast<size_t>(hidden_), 0.0);
    for (size_t p = 0; p < paths_[side].size(); ++p) {
      Tape tape;
      forward_path(g, terms, node_terms, anchor.id, side, p, 0, fanout_cap, tape, true);
      for (int d = 0; d < hidden_; ++d) acc[static_cast<size_t>(d)] += tape.rep[static_cast<size_t>(d)];
    }
    for (auto& x : acc) x /= static_cast<double>(paths_[side].size());
    return acc;
  }

  double score(const HetGraph& g, const EmbeddingTable& terms, const NodeTermsFn& node_terms,
               NodeRef query, NodeRef ad, int fanout_cap) const {
    const auto wq = embed(g, terms, node_terms, query, fanout_cap);
    const auto wa = embed(g, terms, node_terms, ad, fanout_cap);
    double z = scorer_b_;
    for (int d = 0; d < hidden_; ++d) z += scorer_w_[static_cast<size_t>(d)] * wq[static_cast<size_t>(d)];
    for (int d = 0; d < hidden_; ++d)
      z += scorer_w_[static_cast<size_t>(hidden_ + d)] * wa[static_cast<size_t>(d)];
    return 1.0 / (1.0 + std::exp(-z));
  }

  // -- training --------------------------------------------------------------

  struct Grads {
    std::vector<double> flat;                    // same layout as pack()
    std::map<int, std::vector<double>> terms;    // term id -> gradient
  };

  /// Log-loss and gradients for one labeled pair. Gradients for the shared
  /// weights and the scorer land in flat (pack() layout); term-feature
  /// gradients are reported separately.
  double loss_and_grads(const HetGraph& g, const EmbeddingTable& terms,
                        const NodeTermsFn& node_terms, NodeRef query, NodeRef ad, double label,
                        int fanout_cap, Grads& out) const {
    std::vector<std::vector<Tape>> tapes(2);
    std::array<std::vector<double>, 2> anchor{};
    const NodeRef nodes[2] = {query, ad};
    for (int side = 0; side < 2; ++side) {
      anchor[static_cast<size_t>(side)].assign(static_cast<size_t>(hidden_), 0.0);
      tapes[static_cast<size_t>(side)].resize(paths_[side].size());
      for (size_t p = 0; p < paths_[side].size(); ++p) {
        forward_path(g, terms, node_terms, nodes[side].id, side, p, 0, fanout_cap,
                     tapes[static_cast<size_t>(side)][p], true);
        for (int d = 0; d < hidden_; ++d)
          anchor[static_cast<size_t>(side)][static_cast<size_t>(d)] +=
              tapes[static_cast<size_t>(side)][p].rep[static_cast<size_t>(d)];
      }
      for (auto& x : anchor[static_cast<size_t>(side)]) x /= static_cast<double>(paths_[side].size());
    }
    double z = scorer_b_;
    for (int d = 0; d < hidden_; ++d) z += scorer_w_[static_cast<size_t>(d)] * anchor[0][static_cast<size_t>(d)];
    for (int d = 0; d < hidden_; ++d)
      z += scorer_w_[static_cast<size_t>(hidden_ + d)] * anchor[1][static_cast<size_t>(d)];
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double eps = 1e-12;
    const double loss = -(label * std::log(p + eps) + (1.0 - label) * std::log(1.0 - p + eps));

    GradSink sink(*this, out);
    const double dz = p - label;
    out.flat.assign(pack().size(), 0.0);
    sink.scorer_b() += dz;
    for (int side = 0; side < 2; ++side) {
      std::vector<double> ganchor(static_cast<size_t>(hidden_), 0.0);
      for (int d = 0; d < hidden_; ++d) {
        const double w = scorer_w_[static_cast<size_t>(side * hidden_ + d)];
        sink.scorer_w(side * hidden_ + d) += dz * anchor[static_cast<size_t>(side)][static_cast<size_t>(d)];
        ganchor[static_cast<size_t>(d)] = dz * w;
      }
      for (size_t p_i = 0; p_i < paths_[side].size(); ++p_i) {
        std::vector<double> g_rep(ganchor);
        for (auto& x : g_rep) x /= static_cast<double>(paths_[side].size());
        backward_path(g_rep, side, p_i, 0, tapes[static_cast<size_t>(side)][p_i], sink, out);
      }
    }
    return loss;
  }

  // -- flat parameter access (training step + finite-difference checks) ------

  void save(std::ostream& os) const {
    os << "ADSMARKET_AGG_V1\n" << in_dim_ << ' ' << hidden_ << '\n';
    os << paths_[0].size();
    for (const auto& p : paths_[0]) os << '|' << p.str();
    os << '\n' << paths_[1].size();
    for (const auto& p : paths_[1]) os << '|' << p.str();
    os << '\n';
    const auto flat = pack();
    char buf[40];
    os << flat.size() << '\n';
    for (size_t i = 0; i < flat.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%a%c", flat[i], i + 1 < flat.size() ? ' ' : '\n');
      os << buf;
    }
  }

  static AggregatorModel load(std::istream& is) {
    std::string tag;
    is >> tag;
    if (tag != "ADSMARKET_AGG_V1") throw std::runtime_error("not an aggregator checkpoint");
    int in_dim = 0, hidden = 0;
    is >> in_dim >> hidden;
    auto read_paths = [&is]() {
      size_t n = 0;
      is >> n;
      std::string line;
      std::getline(is, line);
      std::vector<MetaPath> out;
      size_t pos = 0;
      for (size_t i = 0; i < n; ++i) {
        const size_t bar = line.find('|', pos);
        size_t next = line.find('|', bar + 1);
        if (next == std::string::npos) next = line.size();
        out.push_back(MetaPath::parse(line.substr(bar + 1, next - bar - 1)));
        pos = next;
      }
      return out;
    };
    auto qp = read_paths();
    auto ap = read_paths();
    AggregatorModel m(in_dim, hidden, std::move(qp), std::move(ap));
    size_t n = 0;
    is >> n;
    std::vector<double> flat(n);
    for (auto& x : flat) {
      std::string s;
      is >> s;
      x = std::strtod(s.c_str(), nullptr);
    }
    m.unpack(flat);
    return m;
  }

  std::vector<double> pack() const {
    std::vector<double> out;
    for (int side = 0; side < 2; ++side)
      for (const auto& per_path : weights_[side])
        for (const auto& w : per_path) out.insert(out.end(), w.a.begin(), w.a.end());
    for (int side = 0; side < 2; ++side)
      for (const auto& per_path : biases_[side])
        for (const auto& b : per_path) out.insert(out.end(), b.begin(), b.end());
    out.insert(out.end(), scorer_w_.begin(), scorer_w_.end());
    out.push_back(scorer_b_);
    return out;
  }

  void unpack(const std::vector<double>& flat) {
    size_t i = 0;
    for (int side = 0; side < 2; ++side)
      for (auto& per_path : weights_[side])
        for (auto& w : per_path)
          for (auto& x : w.a) x = flat.at(i++);
    for (int side = 0; side < 2; ++side)
      for (auto& per_path : biases_[side])
        for (auto& b : per_path)
          for (auto& x : b) x = flat.at(i++);
    for (auto& x : scorer_w_) x = flat.at(i++);
    scorer_b_ = flat.at(i++);
    if (i != flat.size()) throw std::invalid_argument("unpack: size mismatch");
  }

 private:
  struct Tape {
    int node_id = 0;
    std::vector<int> term_ids;
    int known_terms = 0;
    std::vector<double> feat;
    std::vector<double> x;    // concat input (non-leaf)
    std::vector<double> rep;  // output of this level
    std::vector<Tape> kids;
  };

  /// Routes flat-gradient writes to the pack() layout.
  class GradSink {
   public:
    GradSink(const AggregatorModel& m, Grads& out) : m_(m), out_(out) {
      size_t off = 0;
      for (int side = 0; side < 2; ++side) {
        w_off_[side].resize(m.weights_[side].size());
        for (size_t p = 0; p < m.weights_[side].size(); ++p)
          for (const auto& w : m.weights_[side][p]) {
            w_off_[side][p].push_back(off);
            off += w.a.size();
          }
      }
      for (int side = 0; side < 2; ++side) {
        b_off_[side].resize(m.biases_[side].size());
        for (size_t p = 0; p < m.biases_[side].size(); ++p)
          for (const auto& b : m.biases_[side][p]) {
            b_off_[side][p].push_back(off);
            off += b.size();
          }
      }
      scorer_w_off_ = off;
      off += m.scorer_w_.size();
      scorer_b_off_ = off;
    }

    double& weight(int side, size_t path, size_t level, size_t flat_idx) {
      return out_.flat[w_off_[side][path][level] + flat_idx];
    }
    double& bias(int side, size_t path, size_t level, size_t idx) {
      return out_.flat[b_off_[side][path][level] + idx];
    }
    double& scorer_w(int idx) { return out_.flat[scorer_w_off_ + static_cast<size_t>(idx)]; }
    double& scorer_b() { return out_.flat[scorer_b_off_]; }

    void term_grad(int term_id, const std::vector<double>& g, double scale) {
      auto& acc = out_.terms[term_id];
      if (acc.empty()) acc.assign(g.size(), 0.0);
      for (size_t d = 0; d < g.size(); ++d) acc[d] += g[d] * scale;
    }

   private:
    const AggregatorModel& m_;
    Grads& out_;
    std::array<std::vector<std::vector<size_t>>, 2> w_off_;
    std::array<std::vector<std::vector<size_t>>, 2> b_off_;
    size_t scorer_w_off_ = 0;
    size_t scorer_b_off_ = 0;
  };

  static int side_of(NodeType t) {
    if (t == NodeType::kQuery) return 0;
    if (t == NodeType::kAd) return 1;
    throw std::invalid_argument("aggregator embeds query and ad anchors only");
  }

  void features(const EmbeddingTable& terms, const NodeTermsFn& node_terms, NodeRef node,
                bool require, Tape& tape) const {
    tape.feat.assign(static_cast<size_t>(in_dim_), 0.0);
    tape.term_ids.clear();
    for (const auto& t : node_terms(node)) {
      const int tid = terms.term_id(t);
      if (tid < 0) continue;
      tape.term_ids.push_back(tid);
      const auto v = terms.term_vec(tid);
      for (int d = 0; d < in_dim_; ++d) tape.feat[static_cast<size_t>(d)] += v[static_cast<size_t>(d)];
    }
    tape.known_terms = static_cast<int>(tape.term_ids.size());
    if (tape.known_terms == 0) {
      if (require) throw ColdFeatureError("anchor node has no known terms");
      return;  // interior nodes without terms contribute zero features
    }
    for (auto& x : tape.feat) x /= tape.known_terms;
  }

  void forward_path(const HetGraph& g, const EmbeddingTable& terms, const NodeTermsFn& node_terms,
                    int node_id, int side, size_t path, size_t level, int fanout_cap, Tape& tape,
                    bool anchor_level) const {
    const MetaPath& p = paths_[side][path];
    const size_t m = p.length();
    const NodeType level_type = level == 0 ? p.start_type() : p.steps[level - 1].to();
    tape.node_id = node_id;
    features(terms, node_terms, NodeRef{level_type, node_id}, anchor_level && level == 0, tape);
    if (level == m) {
      tape.rep = tape.feat;
      return;
    }
    const int child_dim = (level + 1 == m) ? in_dim_ : hidden_;
    std::vector<double> child_mean(static_cast<size_t>(child_dim), 0.0);
    const auto& nbrs = g.step_neighbors(p.steps[level], node_id);
    const size_t cap = std::min(nbrs.size(), static_cast<size_t>(std::max(1, fanout_cap)));
    tape.kids.resize(cap);
    for (size_t i = 0; i < cap; ++i) {
      forward_path(g, terms, node_terms, nbrs[i].first, side, path, level + 1, fanout_cap,
                   tape.kids[i], false);
      for (int d = 0; d < child_dim; ++d)
        child_mean[static_cast<size_t>(d)] += tape.kids[i].rep[static_cast<size_t>(d)];
    }
    if (cap > 0)
      for (auto& x : child_mean) x /= static_cast<double>(cap);
    tape.x.resize(static_cast<size_t>(in_dim_ + child_dim));
    std::copy(tape.feat.begin(), tape.feat.end(), tape.x.begin());
    std::copy(child_mean.begin(), child_mean.end(), tape.x.begin() + in_dim_);
    const auto& w = weights_[side][path][level];
    auto pre = w.mul(tape.x);
    tape.rep.resize(static_cast<size_t>(hidden_));
    for (int d = 0; d < hidden_; ++d)
      tape.rep[static_cast<size_t>(d)] =
          std::tanh(pre[static_cast<size_t>(d)] + biases_[side][path][level][static_cast<size_t>(d)]);
  }

  void backward_path(const std::vector<double>& g_rep, int side, size_t path, size_t level,
                     const Tape& tape, GradSink& sink, Grads& out) const {
    const MetaPath& p = paths_[side][path];
    const size_t m = p.length();
    if (level == m) {
      // Leaf: rep == feat; distribute into term vectors.
      if (tape.known_terms > 0)
        for (int tid : tape.term_ids) sink.term_grad(tid, g_rep, 1.0 / tape.known_terms);
      return;
    }
    const auto& w = weights_[side][path][level];
    std::vector<double> g_pre(static_cast<size_t>(hidden_));
    for (int d = 0; d < hidden_; ++d) {
      const double r = tape.rep[static_cast<size_t>(d)];
      g_pre[static_cast<size_t>(d)] = g_rep[static_cast<size_t>(d)] * (1.0 - r * r);
      sink.bias(side, path, level, static_cast<size_t>(d)) += g_pre[static_cast<size_t>(d)];
    }
    for (int r = 0; r < w.rows; ++r)
      for (int c = 0; c < w.cols; ++c)
        sink.weight(side, path, level, static_cast<size_t>(r) * w.cols + c) +=
            g_pre[static_cast<size_t>(r)] * tape.x[static_cast<size_t>(c)];
    const auto g_x = w.tmul(g_pre);
    if (tape.known_terms > 0) {
      std::vector<double> g_feat(g_x.begin(), g_x.begin() + in_dim_);
      for (int tid : tape.term_ids) sink.term_grad(tid, g_feat, 1.0 / tape.known_terms);
    }
    if (!tape.kids.empty()) {
      const int child_dim = (level + 1 == m) ? in_dim_ : hidden_;
      std::vector<double> g_child(g_x.begin() + in_dim_, g_x.begin() + in_dim_ + child_dim);
      for (auto& x : g_child) x /= static_cast<double>(tape.kids.size());
      for (const auto& kid : tape.kids) backward_path(g_child, side, path, level + 1, kid, sink, out);
    }
  }

  int in_dim_ = 0;
  int hidden_ = 0;
  std::array<std::vector<MetaPath>, 2> paths_;  // [0]=query side, [1]=ad side
  std::array<std::vector<std::vector<detail::Matrix>>, 2> weights_;
  std::array<std::vector<std::vector<std::vector<double>>>, 2> biases_;
  std::vector<double> scorer_w_;
  double scorer_b_ = 0.0;
};

struct AggregatorTrainReport {
  double train_loss = 0.0;
  double holdout_loss = 0.0;
  double baseline_loss = 0.0;  // constant predictor on the same holdout
};

/// Positive instances are clicked / converted query-ad pairs, negatives the
/// unclicked ones. Deterministic under the rng seed.
inline AggregatorTrainReport train_aggregator(
    AggregatorModel& model, const HetGraph& g, EmbeddingTable& terms, const NodeTermsFn& node_terms,
    const std::vector<std::pair<int, int>>& positives,
    const std::vector<std::pair<int, int>>& negatives, const AggregatorConfig& cfg, Rng& rng) {
  if (positives.empty() || negatives.empty())
    throw std::invalid_argument("train_aggregator: need positives and negatives");

  struct Sample {
    int q, a;
    double y;
  };
  std::vector<Sample> samples;
  samples.reserve(positives.size() + negatives.size());
  for (const auto& [q, a] : positives) samples.push_back({q, a, 1.0});
  for (const auto& [q, a] : negatives) samples.push_back({q, a, 0.0});
  rng.shuffle(samples);
  const size_t holdout_n = static_cast<size_t>(static_cast<double>(samples.size()) * cfg.holdout);
  std::vector<Sample> holdout(samples.end() - static_cast<long>(holdout_n), samples.end());
  samples.resize(samples.size() - holdout_n);

  AggregatorTrainReport report;
  AggregatorModel::Grads grads;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(samples);
    double total = 0.0;
    for (const auto& s : samples) {
      grads.terms.clear();
      total += model.loss_and_grads(g, terms, node_terms, NodeRef{NodeType::kQuery, s.q},
                                    NodeRef{NodeType::kAd, s.a}, s.y, cfg.fanout_cap, grads);
      auto flat = model.pack();
      for (size_t i = 0; i < flat.size(); ++i) flat[i] -= cfg.lr * grads.flat[i];
      model.unpack(flat);
      if (cfg.finetune_terms) {
        for (const auto& [tid, gvec] : grads.terms) {
          auto row = terms.term_vecs.data() + static_cast<size_t>(tid) * terms.dim;
          for (int d = 0; d < terms.dim; ++d) row[d] -= cfg.lr * gvec[static_cast<size_t>(d)];
        }
      }
    }
    report.train_loss = total / static_cast<double>(samples.size());
  }

  double pos_rate = 0.0;
  for (const auto& s : samples) pos_rate += s.y;
  pos_rate = std::clamp(pos_rate / static_cast<double>(samples.size()), 1e-6, 1.0 - 1e-6);
  double hl = 0.0, bl = 0.0;
  for (const auto& s : holdout) {
    const double p = model.score(g, terms, node_terms, NodeRef{NodeType::kQuery, s.q},
                                 NodeRef{NodeType::kAd, s.a}, cfg.fanout_cap);
    hl += -(s.y * std::log(p + 1e-12) + (1 - s.y) * std::log(1 - p + 1e-12));
    bl += -(s.y * std::log(pos_rate) + (1 - s.y) * std::log(1 - pos_rate));
  }
  if (!holdout.empty()) {
    report.holdout_loss = hl / static_cast<double>(holdout.size());
    report.baseline_loss = bl / static_cast<double>(holdout.size());
  }
  return report;
}

}  // namespace adsmarket
