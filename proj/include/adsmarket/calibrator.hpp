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
// CVR calibration (the CF bid factor): binning plus isotonic regression via
// pool-adjacent-violators.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace adsmarket {

/// Weighted least-squares monotone (non-decreasing) fit. Classic PAV stack:
/// merge any block whose mean drops below its predecessor's.
inline std::vector<double> isotonic_fit(const std::vector<double>& values,
                                        const std::vector<double>& weights) {
  if (values.size() != weights.size())
    throw std::invalid_argument("isotonic_fit: size mismatch");
  struct Block {
    double sum, weight;
    size_t count;
  };
  std::vector<Block> stack;
  stack.reserve(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("isotonic_fit: negative weight");
    stack.push_back({values[i] * weights[i], weights[i], 1});
    while (stack.size() >= 2) {
      Block& a = stack[stack.size() - 2];
      Block& b = stack.back();
      // Zero-weight blocks carry no constraint and inherit a neighbour's level.
      const bool violation = a.weight == 0.0 || b.weight == 0.0 ||
                             a.sum / a.weight > b.sum / b.weight;
      if (!violation) break;
      a.sum += b.sum;
      a.weight += b.weight;
      a.count += b.count;
      stack.pop_back();
    }
  }
  std::vector<double> fitted;
  fitted.reserve(values.size());
  for (const auto& b : stack) {
    const double mean = b.weight > 0 ? b.sum / b.weight : 0.0;
    for (size_t c = 0; c < b.count; ++c) fitted.push_back(mean);
  }
  return fitted;
}

struct CalibratorConfig {
  size_t min_pairs = 200;  // below this an identity calibrator is returned
  int max_bins = 20;
};

/// Non-decreasing step map pcvr -> calibrated cvr. Identity until enough
/// pairs have been seen.
class Calibrator {
 public:
  Calibrator() = default;
  Calibrator(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)), identity_(false) {
    for (size_t i = 1; i < ys_.size(); ++i)
      if (ys_[i] + 1e-12 < ys_[i - 1]) throw std::invalid_argument("calibrator not monotone");
  }

  bool is_identity() const { return identity_; }

  double apply(double pcvr) const {
    if (identity_ || xs_.empty()) return std::clamp(pcvr, 0.0, 1.0);
    // Step function: value of the last breakpoint at or below pcvr.
    auto it = std::upper_bound(xs_.begin(), xs_.end(), pcvr);
    const size_t idx = it == xs_.begin() ? 0 : static_cast<size_t>(it - xs_.begin()) - 1;
    return std::clamp(ys_[idx], 0.0, 1.0);
  }

  const std::vector<double>& breakpoints() const { return xs_; }
  const std::vector<double>& levels() const { return ys_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  bool identity_ = true;
};

/// Bins (pcvr, converted) pairs by distinct pcvr (quantile-merged down to
/// max_bins) and runs PAV over the bin means.
inline Calibrator fit_calibrator(const std::vector<std::pair<double, bool>>& pairs,
                                 const CalibratorConfig& cfg = {}) {
  if (pairs.size() < cfg.min_pairs) return Calibrator();  // identity

  std::map<double, std::pair<double, double>> by_score;  // pcvr -> (sum_label, count)
  for (const auto& [p, label] : pairs) {
    auto& cell = by_score[p];
    cell.first += label ? 1.0 : 0.0;
    cell.second += 1.0;
  }
  struct Bin {
    double x_sum = 0, label_sum = 0, weight = 0;
  };
  std::vector<Bin> bins;
  if (static_cast<int>(by_score.size()) <= cfg.max_bins) {
    for (const auto& [x, cell] : by_score)
      bins.push_back({x * cell.second, cell.first, cell.second});
  } else {
    // Equal-count merge preserving score order.
    double total = 0;
    for (const auto& [x, cell] : by_score) total += cell.second;
    const double per_bin = total / cfg.max_bins;
    Bin cur;
    for (const auto& [x, cell] : by_score) {
      cur.x_sum += x * cell.second;
      cur.label_sum += cell.first;
      cur.weight += cell.second;
      if (cur.weight >= per_bin && static_cast<int>(bins.size()) < cfg.max_bins - 1) {
        bins.push_back(cur);
        cur = Bin{};
      }
    }
    if (cur.weight > 0) bins.push_back(cur);
  }

  std::vector<double> values, weights, xs;
  values.reserve(bins.size());
  for (const auto& b : bins) {
    values.push_back(b.label_sum / b.weight);
    weights.push_back(b.weight);
    xs.push_back(b.x_sum / b.weight);
  }
  return Calibrator(std::move(xs), isotonic_fit(values, weights));
}

}  // namespace adsmarket
