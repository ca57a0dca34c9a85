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

#include "adsmarket/calibrator.hpp"

#include <gtest/gtest.h>

#include "adsmarket/rng.hpp"
#include "oracles.hpp"

using namespace adsmarket;

TEST(isotonic_fit, monotone_input_unchanged) {
  const std::vector<double> v = {0.1, 0.2, 0.2, 0.55, 0.9};
  const std::vector<double> w = {1, 2, 1, 3, 1};
  EXPECT_EQ(isotonic_fit(v, w), v);
}

TEST(isotonic_fit, hand_executed_pav) {
  // Bin means [0, 1, 0] with equal weights pool the last two blocks.
  const auto fitted = isotonic_fit({0.0, 1.0, 0.0}, {1.0, 1.0, 1.0});
  ASSERT_EQ(fitted.size(), 3u);
  EXPECT_DOUBLE_EQ(fitted[0], 0.0);
  EXPECT_DOUBLE_EQ(fitted[1], 0.5);
  EXPECT_DOUBLE_EQ(fitted[2], 0.5);
}

TEST(isotonic_fit, matches_exhaustive_monotone_search) {
  Rng rng(404);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t n = 1 + rng.uniform_int(8);
    std::vector<double> v(n), w(n);
    for (size_t i = 0; i < n; ++i) {
      v[i] = 0.25 * static_cast<double>(rng.uniform_int(5));
      w[i] = 1.0 + static_cast<double>(rng.uniform_int(4));
    }
    const auto fast = isotonic_fit(v, w);
    const auto brute = oracle::monotone_fit_by_search(v, w);
    ASSERT_EQ(fast.size(), brute.size());
    for (size_t i = 0; i < n; ++i) EXPECT_NEAR(fast[i], brute[i], 1e-12) << "trial " << trial;
  }
}

TEST(fit_calibrator, identity_below_min_pairs) {
  CalibratorConfig cfg;
  cfg.min_pairs = 10;
  std::vector<std::pair<double, bool>> pairs = {{0.2, true}, {0.3, false}};
  const auto cal = fit_calibrator(pairs, cfg);
  EXPECT_TRUE(cal.is_identity());
  EXPECT_DOUBLE_EQ(cal.apply(0.37), 0.37);
}

TEST(fit_calibrator, constant_labels_give_constant_map) {
  CalibratorConfig cfg;
  cfg.min_pairs = 10;
  std::vector<std::pair<double, bool>> pairs;
  for (int i = 0; i < 100; ++i) pairs.push_back({0.1 + 0.005 * i, true});
  const auto cal = fit_calibrator(pairs, cfg);
  EXPECT_DOUBLE_EQ(cal.apply(0.05), 1.0);
  EXPECT_DOUBLE_EQ(cal.apply(0.9), 1.0);
}

TEST(fit_calibrator, output_monotone_in_input) {
  Rng rng(7);
  std::vector<std::pair<double, bool>> pairs;
  for (int i = 0; i < 5000; ++i) {
    const double p = rng.uniform01();
    pairs.push_back({p, rng.bernoulli(0.2 + 0.6 * p + 0.1 * rng.uniform01())});
  }
  const auto cal = fit_calibrator(pairs);
  double prev = -1.0;
  for (double x = 0.0; x <= 1.0; x += 0.01) {
    const double y = cal.apply(x);
    EXPECT_GE(y, prev - 1e-12);
    EXPECT_GE(y, 0.0);
    EXPECT_LE(y, 1.0);
    prev = y;
  }
}

TEST(fit_calibrator, recovers_known_distortion) {
  // Model scores are a squashed version of the truth; calibration should
  // undo the distortion in the large.
  Rng rng(12);
  std::vector<std::pair<double, bool>> pairs;
  for (int i = 0; i < 40000; ++i) {
    const double truth = rng.uniform(0.05, 0.6);
    const double score = 0.5 * truth + 0.2;  // biased, order-preserving
    pairs.push_back({score, rng.bernoulli(truth)});
  }
  const auto cal = fit_calibrator(pairs);
  EXPECT_NEAR(cal.apply(0.5 * 0.30 + 0.2), 0.30, 0.05);
  EXPECT_NEAR(cal.apply(0.5 * 0.50 + 0.2), 0.50, 0.05);
}
