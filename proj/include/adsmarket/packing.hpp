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
// 2D rectangle packing for template generation: maximal-rectangles with
// best-short-side-fit, tried under several insertion orders. No rotation;
// items that fit nowhere are skipped. Deterministic throughout.

#include <algorithm>
#include <numeric>
#include <vector>

namespace adsmarket {

struct RectSize {
  int w = 0, h = 0;
};

struct Placement {
  int x = 0, y = 0, w = 0, h = 0;
  int item = 0;  // index into the input list
};

enum class PackOrder { kGiven = 0, kAreaDesc, kHeightDesc, kWidthDesc, kPerimeterDesc };
inline constexpr PackOrder kAllPackOrders[] = {PackOrder::kGiven, PackOrder::kAreaDesc,
                                               PackOrder::kHeightDesc, PackOrder::kWidthDesc,
                                               PackOrder::kPerimeterDesc};

namespace detail {

struct FreeRect {
  int x, y, w, h;
};

inline bool contains(const FreeRect& a, const FreeRect& b) {
  return a.x <= b.x && a.y <= b.y && a.x + a.w >= b.x + b.w && a.y + a.h >= b.y + b.h;
}

inline bool intersects(const FreeRect& f, const Placement& p) {
  return f.x < p.x + p.w && p.x < f.x + f.w && f.y < p.y + p.h && p.y < f.y + f.h;
}

}  // namespace detail

inline std::vector<int> pack_order_permutation(const std::vector<RectSize>& items,
                                               PackOrder order) {
  std::vector<int> perm(items.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto by = [&](auto key) {
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
      return key(items[static_cast<size_t>(a)]) > key(items[static_cast<size_t>(b)]);
    });
  };
  switch (order) {
    case PackOrder::kGiven: break;
    case PackOrder::kAreaDesc: by([](const RectSize& r) { return r.w * r.h; }); break;
    case PackOrder::kHeightDesc: by([](const RectSize& r) { return r.h; }); break;
    case PackOrder::kWidthDesc: by([](const RectSize& r) { return r.w; }); break;
    case PackOrder::kPerimeterDesc: by([](const RectSize& r) { return r.w + r.h; }); break;
  }
  return perm;
}

inline std::vector<Placement> maxrects_pack(int canvas_w, int canvas_h,
                                            const std::vector<RectSize>& items, PackOrder order) {
  std::vector<detail::FreeRect> free_rects{{0, 0, canvas_w, canvas_h}};
  std::vector<Placement> placed;

  for (int idx : pack_order_permutation(items, order)) {
    const RectSize& r = items[static_cast<size_t>(idx)];
    if (r.w <= 0 || r.h <= 0) continue;
    // Best-short-side-fit; ties by long side, then top-left, then list order.
    int best = -1;
    long best_short = -1, best_long = -1;
    for (size_t f = 0; f < free_rects.size(); ++f) {
      const auto& fr = free_rects[f];
      if (fr.w < r.w || fr.h < r.h) continue;
      const long leftover_w = fr.w - r.w, leftover_h = fr.h - r.h;
      const long s = std::min(leftover_w, leftover_h);
      const long l = std::max(leftover_w, leftover_h);
      const bool better =
          best < 0 || s < best_short || (s == best_short && l < best_long) ||
          (s == best_short && l == best_long &&
           (fr.y < free_rects[static_cast<size_t>(best)].y ||
            (fr.y == free_rects[static_cast<size_t>(best)].y && fr.x < free_rects[static_cast<size_t>(best)].x)));
      if (better) {
        best = static_cast<int>(f);
        best_short = s;
        best_long = l;
      }
    }
    if (best < 0) continue;  // no room anywhere; skip this item

    const Placement p{free_rects[static_cast<size_t>(best)].x, free_rects[static_cast<size_t>(best)].y,
                      r.w, r.h, idx};
    placed.push_back(p);

    std::vector<detail::FreeRect> next;
    next.reserve(free_rects.size() + 4);
    for (const auto& fr : free_rects) {
      if (!detail::intersects(fr, p)) {
        next.push_back(fr);
        continue;
      }
      if (p.x > fr.x) next.push_back({fr.x, fr.y, p.x - fr.x, fr.h});
      if (p.x + p.w < fr.x + fr.w)
        next.push_back({p.x + p.w, fr.y, fr.x + fr.w - (p.x + p.w), fr.h});
      if (p.y > fr.y) next.push_back({fr.x, fr.y, fr.w, p.y - fr.y});
      if (p.y + p.h < fr.y + fr.h)
        next.push_back({fr.x, p.y + p.h, fr.w, fr.y + fr.h - (p.y + p.h)});
    }
    // Prune rects contained in another.
    free_rects.clear();
    for (size_t i = 0; i < next.size(); ++i) {
      bool redundant = false;
      for (size_t j = 0; j < next.size() && !redundant; ++j)
        if (i != j && detail::contains(next[j], next[i]) &&
            !(detail::contains(next[i], next[j]) && i < j))
          redundant = true;
      if (!redundant) free_rects.push_back(next[i]);
    }
  }
  return placed;
}

inline long packed_area(const std::vector<Placement>& placements) {
  long area = 0;
  for (const auto& p : placements) area += static_cast<long>(p.w) * p.h;
  return area;
}

/// Independent pairwise overlap check (interiors must not intersect).
inline bool placements_overlap(const std::vector<Placement>& placements) {
  for (size_t i = 0; i < placements.size(); ++i)
    for (size_t j = i + 1; j < placements.size(); ++j) {
      const auto& a = placements[i];
      const auto& b = placements[j];
      if (a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h) return true;
    }
  return false;
}

}  // namespace adsmarket
