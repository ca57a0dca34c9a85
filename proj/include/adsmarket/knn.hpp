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
// Cosine kNN over node vectors. Exact mode is a full scan; approximate mode
// partitions vectors into clusters (plain Lloyd iterations, deterministic
// spread init) and probes the closest few clusters.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace adsmarket {

struct KnnResult {
  std::vector<std::pair<int, double>> items;  // (node id, cosine), ranked
  bool clamped = false;                       // k exceeded index size
};

struct KnnApproxParams {
  int n_clusters = 0;  // 0 -> round(sqrt(n))
  int n_probe = 0;     // 0 -> max(1, n_clusters / 5)
  int lloyd_iters = 8;
};

class KnnIndex {
 public:
  enum class Mode { kExact, kApprox };

  KnnIndex() = default;

  KnnIndex(std::vector<int> ids, std::vector<std::vector<double>> vectors, Mode mode,
           const KnnApproxParams& params = {})
      : ids_(std::move(ids)), mode_(mode) {
    if (ids_.size() != vectors.size()) throw std::invalid_argument("knn: id/vector count mismatch");
    if (!vectors.empty()) dim_ = static_cast<int>(vectors.front().size());
    norm_.resize(vectors.size());
    flat_.resize(vectors.size() * static_cast<size_t>(dim_));
    for (size_t i = 0; i < vectors.size(); ++i) {
      if (static_cast<int>(vectors[i].size()) != dim_)
        throw std::invalid_argument("knn: ragged vector dimensions");
      double n2 = 0.0;
      for (int d = 0; d < dim_; ++d) {
        flat_[i * static_cast<size_t>(dim_) + static_cast<size_t>(d)] = vectors[i][static_cast<size_t>(d)];
        n2 += vectors[i][static_cast<size_t>(d)] * vectors[i][static_cast<size_t>(d)];
      }
      norm_[i] = std::sqrt(n2);
    }
    if (mode_ == Mode::kApprox && !ids_.empty()) build_clusters(params);
  }

  size_t size() const { return ids_.size(); }
  Mode mode() const { return mode_; }

  /// k greater than the index size clamps (flag set in the result).
  KnnResult query(std::span<const double> v, int k) const {
    if (k < 0) throw std::invalid_argument("knn: negative k");
    KnnResult res;
    if (static_cast<size_t>(k) > ids_.size()) {
      res.clamped = true;
      k = static_cast<int>(ids_.size());
    }
    if (k == 0 || ids_.empty()) return res;

    std::vector<size_t> pool;
    if (mode_ == Mode::kExact) {
      pool.resize(ids_.size());
      for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    } else {
      pool = probe_members(v);
    }

    res.items.reserve(pool.size());
    for (size_t i : pool) res.items.push_back({ids_[i], cosine_at(i, v)});
    std::sort(res.items.begin(), res.items.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (res.items.size() > static_cast<size_t>(k)) res.items.resize(static_cast<size_t>(k));
    return res;
  }

 private:
  double cosine_at(size_t i, std::span<const double> v) const {
    double dot = 0.0, vn2 = 0.0;
    const double* row = flat_.data() + i * static_cast<size_t>(dim_);
    for (int d = 0; d < dim_; ++d) {
      dot += row[d] * v[static_cast<size_t>(d)];
      vn2 += v[static_cast<size_t>(d)] * v[static_cast<size_t>(d)];
    }
    const double denom = norm_[i] * std::sqrt(vn2);
    return denom > 0.0 ? dot / denom : 0.0;
  }

  void build_clusters(const KnnApproxParams& params) {
    const size_t n = ids_.size();
    size_t k = params.n_clusters > 0
                   ? static_cast<size_t>(params.n_clusters)
                   : static_cast<size_t>(std::max(1.0, std::round(std::sqrt(static_cast<double>(n)))));
    k = std::min(k, n);
    n_probe_ = params.n_probe > 0 ? static_cast<size_t>(params.n_probe)
                                  : std::max<size_t>(1, k / 5);
    n_probe_ = std::min(n_probe_, k);

    // Normalized copies; spread initialization over the id-sorted order.
    std::vector<double> unit(flat_.size());
    for (size_t i = 0; i < n; ++i)
      for (int d = 0; d < dim_; ++d)
        unit[i * static_cast<size_t>(dim_) + static_cast<size_t>(d)] =
            norm_[i] > 0 ? flat_[i * static_cast<size_t>(dim_) + static_cast<size_t>(d)] / norm_[i] : 0.0;
    centroids_.assign(k * static_cast<size_t>(dim_), 0.0);
    for (size_t c = 0; c < k; ++c) {
      const size_t src = c * n / k;
      std::copy_n(unit.begin() + static_cast<long>(src * static_cast<size_t>(dim_)), dim_,
                  centroids_.begin() + static_cast<long>(c * static_cast<size_t>(dim_)));
    }
    assign_.assign(n, 0);
    for (int iter = 0; iter < params.lloyd_iters; ++iter) {
      for (size_t i = 0; i < n; ++i) {
        double best = -2.0;
        size_t best_c = 0;
        for (size_t c = 0; c < k; ++c) {
          double dot = 0.0;
          for (int d = 0; d < dim_; ++d)
            dot += unit[i * static_cast<size_t>(dim_) + static_cast<size_t>(d)] *
                   centroids_[c * static_cast<size_t>(dim_) + static_cast<size_t>(d)];
          if (dot > best) {
            best = dot;
            best_c = c;
          }
        }
        assign_[i] = best_c;
      }
      std::vector<double> sums(k * static_cast<size_t>(dim_), 0.0);
      std::vector<size_t> cnt(k, 0);
      for (size_t i = 0; i < n; ++i) {
        cnt[assign_[i]]++;
        for (int d = 0; d < dim_; ++d)
          sums[assign_[i] * static_cast<size_t>(dim_) + static_cast<size_t>(d)] +=
              unit[i * static_cast<size_t>(dim_) + static_cast<size_t>(d)];
      }
      for (size_t c = 0; c < k; ++c) {
        if (cnt[c] == 0) continue;  // empty cluster keeps its centroid
        double n2 = 0.0;
        for (int d = 0; d < dim_; ++d) {
          const double m = sums[c * static_cast<size_t>(dim_) + static_cast<size_t>(d)] / cnt[c];
          centroids_[c * static_cast<size_t>(dim_) + static_cast<size_t>(d)] = m;
          n2 += m * m;
        }
        if (n2 > 0) {
          const double inv = 1.0 / std::sqrt(n2);
          for (int d = 0; d < dim_; ++d) centroids_[c * static_cast<size_t>(dim_) + static_cast<size_t>(d)] *= inv;
        }
      }
    }
    members_.assign(k, {});
    for (size_t i = 0; i < n; ++i) members_[assign_[i]].push_back(i);
  }

  std::vector<size_t> probe_members(std::span<const double> v) const {
    const size_t k = members_.size();
    std::vector<std::pair<double, size_t>> ranked(k);
    for (size_t c = 0; c < k; ++c) {
      double dot = 0.0;
      for (int d = 0; d < dim_; ++d)
        dot += centroids_[c * static_cast<size_t>(dim_) + static_cast<size_t>(d)] * v[static_cast<size_t>(d)];
      ranked[c] = {dot, c};
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<size_t> pool;
    for (size_t p = 0; p < n_probe_; ++p)
      for (size_t i : members_[ranked[p].second]) pool.push_back(i);
    return pool;
  }

  std::vector<int> ids_;
  std::vector<double> flat_;
  std::vector<double> norm_;
  int dim_ = 0;
  Mode mode_ = Mode::kExact;
  // Approximate mode state.
  std::vector<double> centroids_;
  std::vector<size_t> assign_;
  std::vector<std::vector<size_t>> members_;
  size_t n_probe_ = 1;
};

}  // namespace adsmarket
