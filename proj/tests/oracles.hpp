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
// Test-only reference implementations. Each oracle is written independently
// of the production path it checks: exhaustive enumeration, full scans,
// dynamic programming over the exact model.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "adsmarket/alpha.hpp"
#include "adsmarket/documents.hpp"
#include "adsmarket/hetgraph.hpp"
#include "adsmarket/inverted_index.hpp"
#include "adsmarket/packing.hpp"
#include "adsmarket/pathsim.hpp"
#include "adsmarket/rng.hpp"

namespace adsmarket::oracle {

// ---------------------------------------------------------------------------
// PathSim: exhaustive DFS path-instance enumeration.

/// Weighted count of path instances src ~> dst following the steps exactly
/// (product of edge weights summed over every distinct instance).
inline double dfs_path_count(const HetGraph& g, const std::vector<MetaPathStep>& steps,
                             size_t depth, int node, int target) {
  if (depth == steps.size()) return node == target ? 1.0 : 0.0;
  double total = 0.0;
  for (const auto& [next, w] : g.step_neighbors(steps[depth], node))
    total += w * dfs_path_count(g, steps, depth + 1, next, target);
  return total;
}

inline std::vector<MetaPathStep> reversed_steps(const std::vector<MetaPathStep>& steps) {
  std::vector<MetaPathStep> out;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) out.push_back({it->rel, !it->forward});
  return out;
}

/// Literal Eq.-style scores by enumeration: numerator counts instances under
/// the path; self-visibility counts closed instances (for cross-type paths,
/// the path followed forward then reversed).
inline std::vector<PathSimEntry> pathsim_by_enumeration(const HetGraph& g, const MetaPath& p,
                                                        int src, int k) {
  const bool same_type = p.start_type() == p.end_type();
  std::vector<MetaPathStep> round(p.steps);
  if (!same_type) {
    const auto back = reversed_steps(p.steps);
    round.insert(round.end(), back.begin(), back.end());
  }
  const int n_dst = g.node_count(p.end_type());
  auto self_count = [&](NodeType type, int node) {
    if (same_type) return dfs_path_count(g, p.steps, 0, node, node);
    if (type == p.start_type()) return dfs_path_count(g, round, 0, node, node);
    // Destination side: reversed path then forward.
    std::vector<MetaPathStep> back_round = reversed_steps(p.steps);
    back_round.insert(back_round.end(), p.steps.begin(), p.steps.end());
    return dfs_path_count(g, back_round, 0, node, node);
  };
  const double src_self = self_count(p.start_type(), src);
  std::vector<PathSimEntry> out;
  for (int dst = 0; dst < n_dst; ++dst) {
    const double c = dfs_path_count(g, p.steps, 0, src, dst);
    if (c == 0.0) continue;
    const double denom = src_self + self_count(p.end_type(), dst);
    if (denom <= 0.0) continue;
    out.push_back({dst, 2.0 * c / denom});
  }
  std::sort(out.begin(), out.end(), [](const PathSimEntry& a, const PathSimEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.node_id < b.node_id;
  });
  if (k >= 0 && out.size() > static_cast<size_t>(k)) out.resize(static_cast<size_t>(k));
  return out;
}

// ---------------------------------------------------------------------------
// Isotonic regression: minimum-SSE search over monotone step functions,
// i.e. over all pooled-block compositions with non-decreasing block means.

inline std::vector<double> monotone_fit_by_search(const std::vector<double>& values,
                                                  const std::vector<double>& weights) {
  const size_t n = values.size();
  std::vector<double> wsum(n + 1, 0.0), wvsum(n + 1, 0.0), wv2sum(n + 1, 0.0);
  for (size_t i = 0; i < n; ++i) {
    wsum[i + 1] = wsum[i] + weights[i];
    wvsum[i + 1] = wvsum[i] + weights[i] * values[i];
    wv2sum[i + 1] = wv2sum[i] + weights[i] * values[i] * values[i];
  }
  double best_sse = 1e300;
  std::vector<double> best(n, 0.0);
  const uint32_t masks = n >= 1 ? 1u << (n - 1) : 1u;
  for (uint32_t mask = 0; mask < masks; ++mask) {
    // Bit i set means a block boundary between i and i+1.
    double sse = 0.0;
    bool feasible = true;
    double prev_mean = -1e300;
    std::vector<double> fitted(n, 0.0);
    size_t start = 0;
    for (size_t i = 0; i < n; ++i) {
      const bool boundary = i + 1 == n || (mask >> i) & 1u;
      if (!boundary) continue;
      const double w = wsum[i + 1] - wsum[start];
      const double wv = wvsum[i + 1] - wvsum[start];
      const double wv2 = wv2sum[i + 1] - wv2sum[start];
      const double mean = w > 0.0 ? wv / w : prev_mean;
      if (mean < prev_mean - 1e-12) {
        feasible = false;
        break;
      }
      sse += wv2 - (w > 0.0 ? wv * wv / w : 0.0);
      for (size_t j = start; j <= i; ++j) fitted[j] = mean;
      prev_mean = mean;
      start = i + 1;
    }
    if (feasible && sse < best_sse - 1e-15) {
      best_sse = sse;
      best = fitted;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// 2D packing: exact maximum covered area on small unit grids, branch and
// bound over "fill or forfeit the first empty cell".

namespace detail {

struct PackSearch {
  int W, H;
  std::vector<RectSize> items;
  long best = 0;

  void run(std::vector<uint64_t>& rows, std::vector<bool>& used, long covered, long remaining) {
    best = std::max(best, covered);
    if (covered + remaining <= best) return;
    int cx = -1, cy = -1;
    for (int y = 0; y < H && cy < 0; ++y)
      for (int x = 0; x < W; ++x)
        if (!((rows[static_cast<size_t>(y)] >> x) & 1ull)) {
          cx = x;
          cy = y;
          break;
        }
    if (cy < 0) return;  // full
    for (size_t i = 0; i < items.size(); ++i) {
      if (used[i]) continue;
      const auto [w, h] = items[i];
      if (cx + w > W || cy + h > H) continue;
      bool fits = true;
      for (int y = cy; y < cy + h && fits; ++y) {
        const uint64_t span = ((1ull << w) - 1) << cx;
        if (rows[static_cast<size_t>(y)] & span) fits = false;
      }
      if (!fits) continue;
      for (int y = cy; y < cy + h; ++y) rows[static_cast<size_t>(y)] |= ((1ull << w) - 1) << cx;
      used[i] = true;
      run(rows, used, covered + static_cast<long>(w) * h, remaining - static_cast<long>(w) * h);
      used[i] = false;
      for (int y = cy; y < cy + h; ++y) rows[static_cast<size_t>(y)] &= ~(((1ull << w) - 1) << cx);
    }
    // Or leave this cell permanently empty.
    rows[static_cast<size_t>(cy)] |= 1ull << cx;
    run(rows, used, covered, remaining);
    rows[static_cast<size_t>(cy)] &= ~(1ull << cx);
  }
};

}  // namespace detail

inline long optimal_packed_area(int W, int H, const std::vector<RectSize>& items) {
  detail::PackSearch search{W, H, items};
  std::vector<uint64_t> rows(static_cast<size_t>(H), 0);
  std::vector<bool> used(items.size(), false);
  long remaining = 0;
  for (const auto& r : items) remaining += static_cast<long>(r.w) * r.h;
  remaining = std::min(remaining, static_cast<long>(W) * H);
  search.run(rows, used, 0, remaining);
  return search.best;
}

// ---------------------------------------------------------------------------
// The synthetic eight-bucket MDP for the Alpha policy, exactly solvable by
// backward value iteration over the same (tid, cd-bin) states the policy
// sees. Actions shift the CPA-diff bin through the bid multiplier.

struct AlphaMdp {
  // Representative |CPA - target|/target per cd bin.
  static constexpr double kRep[kGapBins] = {-0.6, -0.3, -0.1, 0.0, 0.1, 0.3, 0.6};

  static int action_shift(int action) {
    const double factor = alpha_to_factor(alpha_ratio(action));
    return static_cast<int>(std::lround((factor - 1.0) * 10.0));  // -3..3 bins
  }

  static double reward_at(int cd_bin) {
    const double gap = std::abs(kRep[cd_bin]);
    return gap == 0.0 ? 15.0 : std::min(15.0, 1.0 / gap);
  }

  // Transition: cd' = clamp(cd + shift + noise), noise in {-1,0,+1} with
  // probabilities {0.25, 0.5, 0.25}.
  static void transitions(int cd_bin, int action, std::vector<std::pair<int, double>>& out) {
    out.clear();
    const int base = cd_bin + action_shift(action);
    out.push_back({std::clamp(base - 1, 0, kGapBins - 1), 0.25});
    out.push_back({std::clamp(base, 0, kGapBins - 1), 0.5});
    out.push_back({std::clamp(base + 1, 0, kGapBins - 1), 0.25});
  }

  /// Exact finite-horizon optimal Q: q[tid][cd][action].
  static std::vector<std::vector<std::vector<double>>> value_iteration(double discount) {
    std::vector q(kNumBuckets, std::vector(kGapBins, std::vector<double>(kAlphaActions, 0.0)));
    std::vector<std::pair<int, double>> trans;
    for (int tid = kNumBuckets - 1; tid >= 0; --tid) {
      for (int cd = 0; cd < kGapBins; ++cd) {
        for (int a = 0; a < kAlphaActions; ++a) {
          double value = 0.0;
          transitions(cd, a, trans);
          for (const auto& [cd2, prob] : trans) {
            double future = 0.0;
            if (tid + 1 < kNumBuckets) {
              double best = -1e300;
              for (int a2 = 0; a2 < kAlphaActions; ++a2)
                best = std::max(best, q[static_cast<size_t>(tid + 1)][static_cast<size_t>(cd2)][static_cast<size_t>(a2)]);
              future = discount * best;
            }
            value += prob * (reward_at(cd2) + future);
          }
          q[static_cast<size_t>(tid)][static_cast<size_t>(cd)][static_cast<size_t>(a)] = value;
        }
      }
    }
    return q;
  }
};

// ---------------------------------------------------------------------------
// kNN: full linear scan with the same ordering contract.

inline std::vector<std::pair<int, double>> knn_scan(const std::vector<int>& ids,
                                                    const std::vector<std::vector<double>>& vecs,
                                                    const std::vector<double>& query, int k) {
  std::vector<std::pair<int, double>> out;
  for (size_t i = 0; i < ids.size(); ++i) {
    double dot = 0, na = 0, nb = 0;
    for (size_t d = 0; d < query.size(); ++d) {
      dot += vecs[i][d] * query[d];
      na += vecs[i][d] * vecs[i][d];
      nb += query[d] * query[d];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    out.push_back({ids[i], denom > 0 ? dot / denom : 0.0});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (out.size() > static_cast<size_t>(k)) out.resize(static_cast<size_t>(k));
  return out;
}

// ---------------------------------------------------------------------------
// BM25: full-scan scorer sharing nothing with the inverted index.

inline std::vector<ScoredAd> bm25_full_scan(const std::vector<AdDocument>& docs,
                                            const QueryDocument& qdoc, int k,
                                            const Bm25Params& params = {}) {
  std::vector<std::string> qterms = qdoc.terms();
  std::sort(qterms.begin(), qterms.end());
  qterms.erase(std::unique(qterms.begin(), qterms.end()), qterms.end());

  std::vector<std::map<std::string, int>> tf(docs.size());
  std::vector<int> len(docs.size(), 0);
  double avg = 0;
  for (size_t i = 0; i < docs.size(); ++i) {
    for (const auto& t : docs[i].terms()) tf[i][t]++;
    for (const auto& [t, f] : tf[i]) len[i] += f;
    avg += len[i];
  }
  avg /= static_cast<double>(docs.size());
  std::vector<ScoredAd> out;
  for (size_t i = 0; i < docs.size(); ++i) {
    double score = 0;
    for (const auto& term : qterms) {
      const auto it = tf[i].find(term);
      if (it == tf[i].end()) continue;
      double df = 0;
      for (size_t j = 0; j < docs.size(); ++j) df += tf[j].count(term) ? 1.0 : 0.0;
      const double idf = std::log(1.0 + (static_cast<double>(docs.size()) - df + 0.5) / (df + 0.5));
      const double norm = params.k1 * (1 - params.b + params.b * len[i] / avg);
      score += idf * (it->second * (params.k1 + 1)) / (it->second + norm);
    }
    if (score > 0) out.push_back({static_cast<int>(i), score});
  }
  std::sort(out.begin(), out.end(), [](const ScoredAd& a, const ScoredAd& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ad_id < b.ad_id;
  });
  if (k >= 0 && out.size() > static_cast<size_t>(k)) out.resize(static_cast<size_t>(k));
  return out;
}

// ---------------------------------------------------------------------------
// Small statistics helpers.

inline double auc(std::vector<std::pair<double, int>> scored) {
  std::sort(scored.begin(), scored.end());
  long pos = 0, neg = 0;
  double rank_sum = 0;
  for (size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].second) {
      pos++;
      rank_sum += static_cast<double>(i) + 1;
    } else {
      neg++;
    }
  }
  return (rank_sum - static_cast<double>(pos) * (pos + 1) / 2) /
         (static_cast<double>(pos) * static_cast<double>(neg));
}

namespace detail {

inline double betacf(double a, double b, double x) {
  const int kMaxIter = 200;
  const double eps = 3e-12, fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

inline double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                    b * std::log(1.0 - x);
  const double front = std::exp(ln);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

/// One-sided one-sample t-test p-value for H1: mean(samples) > 0.
inline double t_test_p_greater(const std::vector<double>& samples) {
  const size_t n = samples.size();
  double mean = 0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(n);
  double var = 0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);
  if (var <= 0.0) return mean > 0.0 ? 0.0 : 1.0;
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  const double df = static_cast<double>(n - 1);
  const double x = df / (df + t * t);
  const double tail = 0.5 * detail::ibeta(df / 2.0, 0.5, x);  // P(T >= |t|)
  return t > 0 ? tail : 1.0 - tail;
}

inline double t_test_p_less(std::vector<double> samples) {
  for (double& x : samples) x = -x;
  return t_test_p_greater(samples);
}

}  // namespace adsmarket::oracle
