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
// Term retrieval: BM25 over ad documents through an inverted index. The test
// suite keeps a full-scan scorer as the oracle; index results must match it
// exactly including tie order.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adsmarket/documents.hpp"

namespace adsmarket {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct ScoredAd {
  int ad_id = 0;
  double score = 0.0;

  friend bool operator==(const ScoredAd&, const ScoredAd&) = default;
};

class InvertedIndex {
 public:
  InvertedIndex() = default;

  explicit InvertedIndex(const std::vector<AdDocument>& docs, const Bm25Params& params = {})
      : params_(params) {
    doc_len_.resize(docs.size());
    double total_len = 0.0;
    for (size_t i = 0; i < docs.size(); ++i) {
      if (docs[i].ad_id != static_cast<int>(i))
        throw std::invalid_argument("inverted index expects dense ad documents");
      std::map<std::string, int> tf;
      for (const auto& t : docs[i].terms()) tf[t]++;
      int len = 0;
      for (const auto& [term, f] : tf) {
        postings_[term].push_back({static_cast<int>(i), f});
        len += f;
      }
      doc_len_[i] = len;
      total_len += len;
    }
    avg_len_ = docs.empty() ? 0.0 : total_len / static_cast<double>(docs.size());
  }

  size_t doc_count() const { return doc_len_.size(); }
  double avg_doc_len() const { return avg_len_; }

  double idf(const std::string& term) const {
    const auto it = postings_.find(term);
    const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    const double n = static_cast<double>(doc_len_.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
  }

  /// BM25 top-k for the query document; distinct query terms weighted once.
  /// Ties break by ad id ascending. Empty tokenized query is an error.
  std::vector<ScoredAd> retrieve(const QueryDocument& qdoc, int k) const {
    std::vector<std::string> qterms = qdoc.terms();
    std::sort(qterms.begin(), qterms.end());
    qterms.erase(std::unique(qterms.begin(), qterms.end()), qterms.end());
    if (qterms.empty()) throw std::invalid_argument("term_retrieve: empty query");

    std::map<int, double> acc;
    for (const auto& term : qterms) {
      const auto it = postings_.find(term);
      if (it == postings_.end()) continue;
      const double w = idf(term);
      for (const auto& [doc, tf] : it->second) {
        const double norm = params_.k1 * (1.0 - params_.b +
                                          params_.b * doc_len_[static_cast<size_t>(doc)] / avg_len_);
        acc[doc] += w * (tf * (params_.k1 + 1.0)) / (tf + norm);
      }
    }
    std::vector<ScoredAd> out;
    out.reserve(acc.size());
    for (const auto& [doc, s] : acc) out.push_back({doc, s});
    std::sort(out.begin(), out.end(), [](const ScoredAd& a, const ScoredAd& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.ad_id < b.ad_id;
    });
    if (k >= 0 && out.size() > static_cast<size_t>(k)) out.resize(static_cast<size_t>(k));
    return out;
  }

  void save(std::ostream& os) const {
    os << "ADSMARKET_INDEX_V1\n";
    os << doc_len_.size() << ' ';
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", avg_len_);
    os << buf << "\n";
    for (size_t i = 0; i < doc_len_.size(); ++i) os << doc_len_[i] << (i + 1 < doc_len_.size() ? ' ' : '\n');
    os << postings_.size() << "\n";
    for (const auto& [term, plist] : postings_) {
      os << term << ' ' << plist.size();
      for (const auto& [doc, tf] : plist) os << ' ' << doc << ' ' << tf;
      os << "\n";
    }
  }

  static InvertedIndex load(std::istream& is) {
    std::string tag;
    is >> tag;
    if (tag != "ADSMARKET_INDEX_V1") throw std::runtime_error("not an index file");
    InvertedIndex idx;
    size_t n_docs = 0;
    is >> n_docs >> idx.avg_len_;
    idx.doc_len_.resize(n_docs);
    for (auto& len : idx.doc_len_) is >> len;
    size_t n_terms = 0;
    is >> n_terms;
    for (size_t t = 0; t < n_terms; ++t) {
      std::string term;
      size_t n = 0;
      is >> term >> n;
      auto& plist = idx.postings_[term];
      plist.resize(n);
      for (auto& [doc, tf] : plist) is >> doc >> tf;
    }
    return idx;
  }

 private:
  Bm25Params params_;
  std::map<std::string, std::vector<std::pair<int, int>>> postings_;  // term -> (doc, tf)
  std::vector<int> doc_len_;
  double avg_len_ = 0.0;
};

}  // namespace adsmarket
