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
// Semantic matcher: a two-tower encoder (mean of term embeddings, one linear
// projection per side) trained on click-through pairs by maximizing the
// softmax likelihood of the clicked ad against sampled negatives.

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "adsmarket/documents.hpp"
#include "adsmarket/rng.hpp"
#include "adsmarket/skipgram.hpp"

namespace adsmarket {

struct TwoTowerConfig {
  int proj_dim = 32;
  int epochs = 4;
  double lr = 0.05;
  int negatives = 4;
  double temperature = 0.2;
  bool share_towers = false;
};

class TwoTowerModel {
 public:
  TwoTowerModel() = default;

  TwoTowerModel(int in_dim, const TwoTowerConfig& cfg) : in_dim_(in_dim), cfg_(cfg) {
    pq_.assign(static_cast<size_t>(cfg.proj_dim) * in_dim, 0.0);
    pa_.assign(static_cast<size_t>(cfg.proj_dim) * in_dim, 0.0);
  }

  bool trained() const { return trained_; }
  int proj_dim() const { return cfg_.proj_dim; }
  const TwoTowerConfig& config() const { return cfg_; }

  std::vector<double> encode_query(const std::vector<std::string>& terms,
                                   const EmbeddingTable& table) const {
    return encode(pq_, terms, table);
  }
  std::vector<double> encode_ad(const std::vector<std::string>& terms,
                                const EmbeddingTable& table) const {
    return encode(cfg_.share_towers ? pq_ : pa_, terms, table);
  }

  /// Softmax click likelihood over {clicked ad} + sampled negatives.
  void train(const std::vector<std::pair<const QueryDocument*, const AdDocument*>>& click_pairs,
             const std::vector<const AdDocument*>& negative_pool, const EmbeddingTable& table,
             Rng& rng) {
    if (click_pairs.empty()) throw std::invalid_argument("two-tower: no click pairs");
    if (negative_pool.empty()) throw std::invalid_argument("two-tower: empty negative pool");
    if (!trained_) {
      for (auto& x : pq_) x = rng.uniform(-0.1, 0.1);
      if (cfg_.share_towers)
        pa_ = pq_;
      else
        for (auto& x : pa_) x = rng.uniform(-0.1, 0.1);
    }

    const int P = cfg_.proj_dim;
    std::vector<std::vector<double>> ad_inputs;  // candidate slot 0 = positive
    std::vector<std::vector<double>> ad_vecs;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      for (const auto& [qdoc, addoc] : click_pairs) {
        const auto q_in = mean_terms(qdoc->terms(), table);
        ad_inputs.clear();
        ad_inputs.push_back(mean_terms(addoc->terms(), table));
        for (int m = 0; m < cfg_.negatives; ++m) {
          const auto* neg = negative_pool[rng.uniform_int(negative_pool.size())];
          if (neg->ad_id == addoc->ad_id) continue;
          ad_inputs.push_back(mean_terms(neg->terms(), table));
        }
        const auto qv = project(pq_, q_in);
        ad_vecs.clear();
        for (const auto& a_in : ad_inputs) ad_vecs.push_back(project(cfg_.share_towers ? pq_ : pa_, a_in));

        // Softmax over scores s_i = qv . av_i / temperature.
        std::vector<double> s(ad_vecs.size(), 0.0);
        double smax = -1e300;
        for (size_t i = 0; i < ad_vecs.size(); ++i) {
          for (int d = 0; d < P; ++d) s[i] += qv[static_cast<size_t>(d)] * ad_vecs[i][static_cast<size_t>(d)];
          s[i] /= cfg_.temperature;
          smax = std::max(smax, s[i]);
        }
        double z = 0.0;
        for (double& x : s) {
          x = std::exp(x - smax);
          z += x;
        }
        // d loss / d s_i = p_i - [i == 0]
        std::vector<double> g_qv(static_cast<size_t>(P), 0.0);
        std::vector<std::vector<double>> g_av(ad_vecs.size(), std::vector<double>(static_cast<size_t>(P), 0.0));
        for (size_t i = 0; i < ad_vecs.size(); ++i) {
          const double gi = (s[i] / z - (i == 0 ? 1.0 : 0.0)) / cfg_.temperature;
          for (int d = 0; d < P; ++d) {
            g_qv[static_cast<size_t>(d)] += gi * ad_vecs[i][static_cast<size_t>(d)];
            g_av[i][static_cast<size_t>(d)] += gi * qv[static_cast<size_t>(d)];
          }
        }
        apply_grad(pq_, g_qv, q_in);
        auto& pa = cfg_.share_towers ? pq_ : pa_;
        for (size_t i = 0; i < ad_vecs.size(); ++i) apply_grad(pa, g_av[i], ad_inputs[i]);
      }
    }
    trained_ = true;
  }

  void save(std::ostream& os) const {
    os << "ADSMARKET_TOWER_V1\n";
    os << in_dim_ << ' ' << cfg_.proj_dim << ' ' << cfg_.share_towers << ' ' << trained_ << "\n";
    char buf[40];
    auto dump = [&](const std::vector<double>& m) {
      for (size_t i = 0; i < m.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%a%c", m[i], i + 1 < m.size() ? ' ' : '\n');
        os << buf;
      }
    };
    dump(pq_);
    dump(pa_);
  }

  static TwoTowerModel load(std::istream& is, const TwoTowerConfig& cfg_in = {}) {
    std::string tag;
    is >> tag;
    if (tag != "ADSMARKET_TOWER_V1") throw std::runtime_error("not a tower checkpoint");
    TwoTowerConfig cfg = cfg_in;
    int in_dim = 0;
    bool trained = false;
    is >> in_dim >> cfg.proj_dim >> cfg.share_towers >> trained;
    TwoTowerModel m(in_dim, cfg);
    auto get = [&is]() {
      std::string s;
      is >> s;
      return std::strtod(s.c_str(), nullptr);
    };
    for (auto& x : m.pq_) x = get();
    for (auto& x : m.pa_) x = get();
    m.trained_ = trained;
    return m;
  }

 private:
  std::vector<double> mean_terms(const std::vector<std::string>& terms,
                                 const EmbeddingTable& table) const {
    std::vector<double> v(static_cast<size_t>(in_dim_), 0.0);
    int known = 0;
    for (const auto& t : terms) {
      const int tid = table.term_id(t);
      if (tid < 0) continue;
      const auto row = table.term_vec(tid);
      for (int d = 0; d < in_dim_; ++d) v[static_cast<size_t>(d)] += row[static_cast<size_t>(d)];
      ++known;
    }
    if (known > 0)
      for (auto& x : v) x /= known;
    return v;
  }

  std::vector<double> project(const std::vector<double>& p, const std::vector<double>& x) const {
    std::vector<double> y(static_cast<size_t>(cfg_.proj_dim), 0.0);
    for (int r = 0; r < cfg_.proj_dim; ++r) {
      double s = 0.0;
      for (int c = 0; c < in_dim_; ++c)
        s += p[static_cast<size_t>(r) * in_dim_ + static_cast<size_t>(c)] * x[static_cast<size_t>(c)];
      y[static_cast<size_t>(r)] = s;
    }
    return y;
  }

  void apply_grad(std::vector<double>& p, const std::vector<double>& g_out,
                  const std::vector<double>& x) {
    for (int r = 0; r < cfg_.proj_dim; ++r)
      for (int c = 0; c < in_dim_; ++c)
        p[static_cast<size_t>(r) * in_dim_ + static_cast<size_t>(c)] -=
            cfg_.lr * g_out[static_cast<size_t>(r)] * x[static_cast<size_t>(c)];
  }

  std::vector<double> encode(const std::vector<double>& proj, const std::vector<std::string>& terms,
                             const EmbeddingTable& table) const {
    if (!trained_) throw std::logic_error("two-tower model not trained");
    auto v = project(proj, mean_terms(terms, table));
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 > 0.0) {
      const double inv = 1.0 / std::sqrt(n2);
      for (auto& x : v) x *= inv;
    }
    return v;
  }

  int in_dim_ = 0;
  TwoTowerConfig cfg_;
  std::vector<double> pq_;
  std::vector<double> pa_;
  bool trained_ = false;
};

}  // namespace adsmarket
