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
// Predicted CTR/CVR: a multi-task model with one shared feature-embedding
// lookup, a CTR head trained on impressions and one CVR head per conversion
// type trained on clicked impressions. Heads are sigmoid readouts over
// additively pooled shared embeddings (a feature with a zero row is exactly
// neutral), so the sharing claim is literal: perturbing a shared feature row
// moves every head.

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <stdexcept>
#include <string>
#include <vector>

#include "adsmarket/market.hpp"
#include "adsmarket/rng.hpp"
#include "adsmarket/text.hpp"

namespace adsmarket {

struct FeatureVector {
  std::vector<uint32_t> idx;  // hashed indices, all < hash space

  void validate(uint32_t space) const {
    if (idx.empty()) throw std::invalid_argument("empty feature vector");
    for (uint32_t i : idx)
      if (i >= space) throw std::invalid_argument("feature index outside hash space");
  }
};

struct FeatureConfig {
  int hash_bits = 18;  // single hash function, fixed space
  // Memorization crosses; off by default, the match-signal features carry
  // the structure and the crosses only add variance at desk scale.
  bool term_ad_cross = false;
  bool term_vertical_cross = false;

  uint32_t space() const { return 1u << hash_bits; }
};

namespace detail {

inline uint32_t feat_hash(std::string_view salt, std::string_view value, uint32_t space) {
  return static_cast<uint32_t>(fnv1a64(value, fnv1a64(salt)) & (space - 1));
}

}  // namespace detail

namespace detail {

/// Bucketized distinct-term overlap |q inter d| / |q| in 0..10.
inline int overlap_bucket(const std::vector<std::string>& q, const std::vector<std::string>& d) {
  std::vector<std::string> qd(q), dd(d);
  std::sort(qd.begin(), qd.end());
  qd.erase(std::unique(qd.begin(), qd.end()), qd.end());
  std::sort(dd.begin(), dd.end());
  dd.erase(std::unique(dd.begin(), dd.end()), dd.end());
  if (qd.empty()) return 0;
  size_t hits = 0;
  for (const auto& t : qd)
    if (std::binary_search(dd.begin(), dd.end(), t)) ++hits;
  return static_cast<int>(10.0 * static_cast<double>(hits) / static_cast<double>(qd.size()) + 0.5);
}

}  // namespace detail

/// Hashed features for one (query, ad, format) auction context. Besides ids
/// and crosses this carries the query/ad text-match signals the ranking
/// models live on: bucketized creative and landing overlap.
inline FeatureVector make_features(const Query& q, const Ad& ad, int advertiser_id, int vertical,
                                   const ComponentCounts& format, const FeatureConfig& cfg) {
  const uint32_t space = cfg.space();
  FeatureVector fv;
  fv.idx.reserve(q.text.size() * 2 + 10);
  for (const auto& t : q.text) fv.idx.push_back(detail::feat_hash("q", t, space));
  fv.idx.push_back(detail::feat_hash("seg", std::to_string(q.user_segment), space));
  fv.idx.push_back(detail::feat_hash("b", std::to_string(q.bucket), space));
  fv.idx.push_back(detail::feat_hash("ad", std::to_string(ad.id), space));
  fv.idx.push_back(detail::feat_hash("adv", std::to_string(advertiser_id), space));
  fv.idx.push_back(detail::feat_hash("vert", std::to_string(vertical), space));
  std::string fmt_sig;
  for (int c : format) fmt_sig += std::to_string(c) + ",";
  fv.idx.push_back(detail::feat_hash("fmt", fmt_sig, space));
  fv.idx.push_back(detail::feat_hash("segxvert",
                                     std::to_string(q.user_segment) + "x" + std::to_string(vertical),
                                     space));
  fv.idx.push_back(detail::feat_hash(
      "ovq", std::to_string(detail::overlap_bucket(q.text, ad.creative_text)), space));
  fv.idx.push_back(detail::feat_hash(
      "ovl", std::to_string(detail::overlap_bucket(q.text, ad.landing_terms)), space));
  if (cfg.term_ad_cross)
    for (const auto& t : q.text)
      fv.idx.push_back(detail::feat_hash("txad", t + "#" + std::to_string(ad.id), space));
  if (cfg.term_vertical_cross)
    for (const auto& t : q.text)
      fv.idx.push_back(detail::feat_hash("txv", t + "#" + std::to_string(vertical), space));
  return fv;
}

// Log rows. Clicks reference parent impressions; conversions parent clicks.
struct ImpressionRow {
  int64_t id = 0;
  FeatureVector fv;
};
struct ClickRow {
  int64_t impression_id = 0;
  int conversion_type = 0;
};
struct ConversionRow {
  int64_t impression_id = 0;
  int conversion_type = 0;
};

struct ResponseTrainConfig {
  int epochs = 3;
  double lr = 0.05;         // AdaGrad step size
  double embed_lr = 0.05;   // AdaGrad step size for embedding rows
  double l2 = 0.01;         // per-example L2 on touched embedding rows
  // Head weight vectors stay at their random init and act as fixed readout
  // directions; each head is then plain logistic regression in its own
  // subspace of the shared table. The bias still trains.
  bool freeze_head_weights = true;
  double ctr_weight = 1.0;  // task loss weights; the source paper leaves the
  double cvr_weight = 1.0;  // mix unspecified, 1:1 is the shipped default
  double holdout = 0.1;
  uint64_t seed = 7;
};

struct EpochLoss {
  int epoch = 0;
  std::string task;
  double loss = 0.0;
};

struct ResponseTrainReport {
  std::vector<EpochLoss> epochs;
  double holdout_ctr_loss = 0.0, baseline_ctr_loss = 0.0;
  double holdout_cvr_loss = 0.0, baseline_cvr_loss = 0.0;

  std::string csv() const {
    std::string out = "epoch,task,loss\n";
    for (const auto& e : epochs) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%d,%s,%.9g\n", e.epoch, e.task.c_str(), e.loss);
      out += buf;
    }
    return out;
  }
};

class ResponseModel {
 public:
  ResponseModel() = default;
  ResponseModel(const FeatureConfig& features, int dim,
                std::vector<int> conversion_types = {0, 1, 2})
      : features_(features), dim_(dim) {
    embed_.assign(static_cast<size_t>(features_.space()) * dim_, 0.0);
    ctr_ = Head(dim_);
    for (int t : conversion_types) cvr_.emplace(t, Head(dim_));
  }

  const FeatureConfig& feature_config() const { return features_; }
  int dim() const { return dim_; }
  bool has_conversion_type(int t) const { return cvr_.count(t) > 0; }

  double predict_ctr(const FeatureVector& fv) const { return predict(ctr_, fv); }

  double predict_cvr(const FeatureVector& fv, int conversion_type) const {
    auto it = cvr_.find(conversion_type);
    if (it == cvr_.end()) throw std::invalid_argument("unknown conversion type");
    return predict(it->second, fv);
  }

  struct HeadGrads {
    std::vector<double> w;
    double b = 0.0;
    std::map<uint32_t, std::vector<double>> embed;  // feature row -> gradient
  };

  /// Log-loss and analytic gradients for one example; the same path the
  /// trainer steps on, so finite-difference checks cover training math.
  double loss_and_grads_ctr(const FeatureVector& fv, double label, HeadGrads& out) const {
    return loss_and_grads(ctr_, fv, label, out);
  }
  double loss_and_grads_cvr(const FeatureVector& fv, int conversion_type, double label,
                            HeadGrads& out) const {
    auto it = cvr_.find(conversion_type);
    if (it == cvr_.end()) throw std::invalid_argument("unknown conversion type");
    return loss_and_grads(it->second, fv, label, out);
  }

  std::span<double> ctr_weights() { return ctr_.w; }
  double& ctr_bias() { return ctr_.b; }
  std::span<double> cvr_weights(int conversion_type) { return cvr_.at(conversion_type).w; }
  double& cvr_bias(int conversion_type) { return cvr_.at(conversion_type).b; }

  /// Direct row access (shared-lookup property tests).
  std::span<double> embedding_row(uint32_t feature) {
    return {embed_.data() + static_cast<size_t>(feature) * dim_, static_cast<size_t>(dim_)};
  }

  bool initialized() const { return initialized_; }

  /// Breaks the zero-init bilinear dead point before the first gradient
  /// step: embeddings get a small random spread, heads a random direction so
  /// the embedding rows see gradient immediately.
  void init_random(uint64_t seed, double embed_scale = 0.05, double head_scale = 0.5) {
    Rng rng(seed);
    for (auto& x : embed_) x = rng.uniform(-embed_scale, embed_scale);
    for (auto& x : ctr_.w) x = rng.uniform(-head_scale, head_scale);
    for (auto& [t, head] : cvr_)
      for (auto& x : head.w) x = rng.uniform(-head_scale, head_scale);
    initialized_ = true;
  }

  void save(std::ostream& os) const {
    os << "ADSMARKET_MODEL_V1\n";
    os << "dims " << features_.hash_bits << ' ' << dim_ << ' ' << features_.term_ad_cross << ' '
       << features_.term_vertical_cross << ' ' << initialized_ << "\n";
    char buf[40];
    auto put = [&](double v) {
      std::snprintf(buf, sizeof(buf), " %a", v);
      os << buf;
    };
    os << "ctr";
    put(ctr_.b);
    for (double v : ctr_.w) put(v);
    os << "\n";
    for (const auto& [t, head] : cvr_) {
      os << "cvr " << t;
      put(head.b);
      for (double v : head.w) put(v);
      os << "\n";
    }
    int64_t nonzero = 0;
    for (size_t row = 0; row < features_.space(); ++row) {
      const double* r = embed_.data() + row * static_cast<size_t>(dim_);
      bool any = false;
      for (int d = 0; d < dim_; ++d) any = any || r[d] != 0.0;
      if (any) nonzero++;
    }
    os << "embed " << nonzero << "\n";
    for (size_t row = 0; row < features_.space(); ++row) {
      const double* r = embed_.data() + row * static_cast<size_t>(dim_);
      bool any = false;
      for (int d = 0; d < dim_; ++d) any = any || r[d] != 0.0;
      if (!any) continue;
      os << "e " << row;
      for (int d = 0; d < dim_; ++d) put(r[d]);
      os << "\n";
    }
  }

  static ResponseModel load(std::istream& is) {
    std::string tag;
    is >> tag;
    if (tag != "ADSMARKET_MODEL_V1") throw std::runtime_error("not a response model checkpoint");
    FeatureConfig fc;
    int dim = 0;
    bool initialized = false;
    is >> tag >> fc.hash_bits >> dim >> fc.term_ad_cross >> fc.term_vertical_cross >> initialized;
    ResponseModel m(fc, dim, {});
    m.initialized_ = initialized;
    auto get = [&is]() {
      std::string s;
      is >> s;
      return std::strtod(s.c_str(), nullptr);
    };
    is >> tag;  // "ctr"
    m.ctr_.b = get();
    for (auto& v : m.ctr_.w) v = get();
    while (is >> tag && tag == "cvr") {
      int t = 0;
      is >> t;
      Head head(dim);
      head.b = get();
      for (auto& v : head.w) v = get();
      m.cvr_.emplace(t, std::move(head));
    }
    int64_t nonzero = 0;
    is >> nonzero;  // tag == "embed"
    for (int64_t i = 0; i < nonzero; ++i) {
      size_t row = 0;
      is >> tag >> row;
      for (int d = 0; d < dim; ++d) m.embed_[row * static_cast<size_t>(dim) + static_cast<size_t>(d)] = get();
    }
    return m;
  }

 private:
  struct Head {
    Head() = default;
    explicit Head(int dim) : w(static_cast<size_t>(dim), 0.0) {}
    std::vector<double> w;
    double b = 0.0;
  };

  std::vector<double> pooled(const FeatureVector& fv) const {
    fv.validate(features_.space());
    std::vector<double> pool(static_cast<size_t>(dim_), 0.0);
    for (uint32_t f : fv.idx) {
      const double* row = embed_.data() + static_cast<size_t>(f) * dim_;
      for (int d = 0; d < dim_; ++d) pool[static_cast<size_t>(d)] += row[d];
    }
    return pool;
  }

  double predict(const Head& head, const FeatureVector& fv) const {
    const auto pool = pooled(fv);
    double z = head.b;
    for (int d = 0; d < dim_; ++d) z += head.w[static_cast<size_t>(d)] * pool[static_cast<size_t>(d)];
    return 1.0 / (1.0 + std::exp(-z));
  }

  double loss_and_grads(const Head& head, const FeatureVector& fv, double label,
                        HeadGrads& out) const {
    const auto pool = pooled(fv);
    double z = head.b;
    for (int d = 0; d < dim_; ++d) z += head.w[static_cast<size_t>(d)] * pool[static_cast<size_t>(d)];
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double dz = p - label;
    out.w.assign(static_cast<size_t>(dim_), 0.0);
    out.b = dz;
    for (int d = 0; d < dim_; ++d) out.w[static_cast<size_t>(d)] = dz * pool[static_cast<size_t>(d)];
    out.embed.clear();
    const double scale = dz;
    for (uint32_t f : fv.idx) {
      auto& g = out.embed[f];
      if (g.empty()) g.assign(static_cast<size_t>(dim_), 0.0);
      for (int d = 0; d < dim_; ++d) g[static_cast<size_t>(d)] += scale * head.w[static_cast<size_t>(d)];
    }
    const double eps = 1e-12;
    return -(label * std::log(p + eps) + (1.0 - label) * std::log(1.0 - p + eps));
  }

  FeatureConfig features_;
  int dim_ = 0;
  std::vector<double> embed_;
  Head ctr_;
  std::map<int, Head> cvr_;
  bool initialized_ = false;
};

/// Joint training: the CTR task sees every impression, the CVR task only
/// clicked ones, both through the shared table. Rejects empty logs, clicks
/// without a parent impression and conversions without a parent click.
inline ResponseTrainReport train_response_model(ResponseModel& model,
                                                const std::vector<ImpressionRow>& impressions,
                                                const std::vector<ClickRow>& clicks,
                                                const std::vector<ConversionRow>& conversions,
                                                const ResponseTrainConfig& cfg = {}) {
  if (impressions.empty() || clicks.empty())
    throw std::invalid_argument("train: empty impression or click log");

  std::map<int64_t, const ImpressionRow*> by_id;
  for (const auto& imp : impressions) by_id[imp.id] = &imp;
  std::map<int64_t, bool> clicked;
  for (const auto& c : clicks) {
    if (!by_id.count(c.impression_id))
      throw std::invalid_argument("click references unknown impression");
    clicked[c.impression_id] = true;
  }
  std::map<std::pair<int64_t, int>, bool> converted;
  for (const auto& cv : conversions) {
    if (!clicked.count(cv.impression_id))
      throw std::invalid_argument("conversion without a parent click");
    converted[{cv.impression_id, cv.conversion_type}] = true;
  }

  struct CtrSample {
    const FeatureVector* fv;
    double y;
  };
  struct CvrSample {
    const FeatureVector* fv;
    int type;
    double y;
  };
  std::vector<CtrSample> ctr_data;
  ctr_data.reserve(impressions.size());
  for (const auto& imp : impressions)
    ctr_data.push_back({&imp.fv, clicked.count(imp.id) ? 1.0 : 0.0});
  std::vector<CvrSample> cvr_data;
  cvr_data.reserve(clicks.size());
  for (const auto& c : clicks) {
    if (!model.has_conversion_type(c.conversion_type))
      throw std::invalid_argument("click log carries unknown conversion type");
    cvr_data.push_back({&by_id.at(c.impression_id)->fv, c.conversion_type,
                        converted.count({c.impression_id, c.conversion_type}) ? 1.0 : 0.0});
  }

  if (!model.initialized()) model.init_random(cfg.seed ^ 0x1717ULL);
  Rng rng(cfg.seed);
  rng.shuffle(ctr_data);
  rng.shuffle(cvr_data);
  const size_t ctr_hold = static_cast<size_t>(static_cast<double>(ctr_data.size()) * cfg.holdout);
  const size_t cvr_hold = static_cast<size_t>(static_cast<double>(cvr_data.size()) * cfg.holdout);
  const size_t ctr_train = ctr_data.size() - ctr_hold;
  const size_t cvr_train = cvr_data.size() - cvr_hold;

  ResponseTrainReport report;
  ResponseModel::HeadGrads grads;
  // AdaGrad: per-coordinate accumulators, kept trainer-local.
  struct HeadOpt {
    std::vector<double> w_acc;
    double b_acc = 0.0;
  };
  const int dim = model.dim();
  HeadOpt ctr_opt{std::vector<double>(static_cast<size_t>(dim), 0.0), 0.0};
  std::map<int, HeadOpt> cvr_opt;
  std::unordered_map<uint32_t, std::vector<double>> embed_acc;
  const double eps = 1e-8;
  auto ada_step = [&](double lr, double embed_lr, const ResponseModel::HeadGrads& g,
                      std::span<double> w, double& b, HeadOpt& opt) {
    opt.b_acc += g.b * g.b;
    b -= lr * g.b / std::sqrt(opt.b_acc + eps);
    if (!cfg.freeze_head_weights) {
      for (int d = 0; d < dim; ++d) {
        const double gd = g.w[static_cast<size_t>(d)];
        opt.w_acc[static_cast<size_t>(d)] += gd * gd;
        w[static_cast<size_t>(d)] -= lr * gd / std::sqrt(opt.w_acc[static_cast<size_t>(d)] + eps);
      }
    }
    for (const auto& [f, gr] : g.embed) {
      auto& acc = embed_acc[f];
      if (acc.empty()) acc.assign(static_cast<size_t>(dim), 0.0);
      auto row = model.embedding_row(f);
      for (int d = 0; d < dim; ++d) {
        const double gd = gr[static_cast<size_t>(d)] + cfg.l2 * row[static_cast<size_t>(d)];
        acc[static_cast<size_t>(d)] += gd * gd;
        row[static_cast<size_t>(d)] -= embed_lr * gd / std::sqrt(acc[static_cast<size_t>(d)] + eps);
      }
    }
  };
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double ctr_loss = 0.0;
    for (size_t i = 0; i < ctr_train; ++i) {
      ctr_loss += model.loss_and_grads_ctr(*ctr_data[i].fv, ctr_data[i].y, grads);
      ada_step(cfg.lr * cfg.ctr_weight, cfg.embed_lr * cfg.ctr_weight, grads, model.ctr_weights(),
               model.ctr_bias(), ctr_opt);
    }
    double cvr_loss = 0.0;
    for (size_t i = 0; i < cvr_train; ++i) {
      cvr_loss += model.loss_and_grads_cvr(*cvr_data[i].fv, cvr_data[i].type, cvr_data[i].y, grads);
      auto [it, inserted] = cvr_opt.try_emplace(cvr_data[i].type);
      if (inserted) it->second.w_acc.assign(static_cast<size_t>(dim), 0.0);
      ada_step(cfg.lr * cfg.cvr_weight, cfg.embed_lr * cfg.cvr_weight, grads,
               model.cvr_weights(cvr_data[i].type), model.cvr_bias(cvr_data[i].type), it->second);
    }
    report.epochs.push_back({epoch, "ctr", ctr_train ? ctr_loss / static_cast<double>(ctr_train) : 0.0});
    report.epochs.push_back({epoch, "cvr", cvr_train ? cvr_loss / static_cast<double>(cvr_train) : 0.0});
  }

  auto logloss = [](double p, double y) {
    const double eps = 1e-12;
    return -(y * std::log(p + eps) + (1 - y) * std::log(1 - p + eps));
  };
  double base_ctr = 0.0;
  for (size_t i = 0; i < ctr_train; ++i) base_ctr += ctr_data[i].y;
  base_ctr = std::clamp(ctr_train ? base_ctr / static_cast<double>(ctr_train) : 0.5, 1e-6, 1 - 1e-6);
  double base_cvr = 0.0;
  for (size_t i = 0; i < cvr_train; ++i) base_cvr += cvr_data[i].y;
  base_cvr = std::clamp(cvr_train ? base_cvr / static_cast<double>(cvr_train) : 0.5, 1e-6, 1 - 1e-6);
  for (size_t i = ctr_train; i < ctr_data.size(); ++i) {
    report.holdout_ctr_loss += logloss(model.predict_ctr(*ctr_data[i].fv), ctr_data[i].y);
    report.baseline_ctr_loss += logloss(base_ctr, ctr_data[i].y);
  }
  for (size_t i = cvr_train; i < cvr_data.size(); ++i) {
    report.holdout_cvr_loss += logloss(model.predict_cvr(*cvr_data[i].fv, cvr_data[i].type), cvr_data[i].y);
    report.baseline_cvr_loss += logloss(base_cvr, cvr_data[i].y);
  }
  if (ctr_hold) {
    report.holdout_ctr_loss /= static_cast<double>(ctr_hold);
    report.baseline_ctr_loss /= static_cast<double>(ctr_hold);
  }
  if (cvr_hold) {
    report.holdout_cvr_loss /= static_cast<double>(cvr_hold);
    report.baseline_cvr_loss /= static_cast<double>(cvr_hold);
  }
  return report;
}

}  // namespace adsmarket
