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
// Componentized ad creation: Material -> Component -> Template -> Format.
// Templates come out of heuristic rectangle packing under design rules
// (exactly one title, title above description, flush-or-separated slots);
// formats fill template slots with components and are selected by
// eCPM = CPA * CVR * CTR.

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "adsmarket/market.hpp"
#include "adsmarket/material.hpp"
#include "adsmarket/money.hpp"
#include "adsmarket/packing.hpp"
#include "adsmarket/response_model.hpp"

namespace adsmarket {

struct Component {
  int id = 0;
  ComponentKind kind = ComponentKind::kTitle;
  int material_index = -1;
  int w = 0, h = 0;
};

struct ComponentizeReport {
  std::vector<std::pair<int, std::string>> skipped;  // (material index, reason)
};

/// Fixed material-kind -> component-kind pairing; sizes from a fixed table,
/// images keep their intrinsic hints.
inline ComponentKind component_kind_for(MaterialKind m) {
  switch (m) {
    case MaterialKind::kTextTitle: return ComponentKind::kTitle;
    case MaterialKind::kTextDescription: return ComponentKind::kDescription;
    case MaterialKind::kImage: return ComponentKind::kImage;
    case MaterialKind::kAppPackage: return ComponentKind::kDownloadButton;
    case MaterialKind::kPhone: return ComponentKind::kCallButton;
    case MaterialKind::kProductLink: return ComponentKind::kProductCard;
    default: return ComponentKind::kSitelinkRow;
  }
}

inline RectSize component_size(ComponentKind k, const Material& m) {
  switch (k) {
    case ComponentKind::kTitle: return {10, 2};
    case ComponentKind::kDescription: return {10, 3};
    case ComponentKind::kImage: return {m.width, m.height};
    case ComponentKind::kCallButton: return {4, 2};
    case ComponentKind::kDownloadButton: return {4, 2};
    case ComponentKind::kSitelinkRow: return {10, 1};
    default: return {5, 2};  // product card
  }
}

inline std::vector<Component> componentize(const std::vector<Material>& materials,
                                           ComponentizeReport* report = nullptr) {
  std::vector<Component> out;
  for (size_t i = 0; i < materials.size(); ++i) {
    const auto& m = materials[i];
    try {
      m.validate();
    } catch (const std::exception& e) {
      if (report) report->skipped.push_back({static_cast<int>(i), e.what()});
      continue;
    }
    const ComponentKind kind = component_kind_for(m.kind);
    const RectSize size = component_size(kind, m);
    if (size.w <= 0 || size.h <= 0) {
      if (report) report->skipped.push_back({static_cast<int>(i), "non-positive component size"});
      continue;
    }
    out.push_back({static_cast<int>(out.size()), kind, static_cast<int>(i), size.w, size.h});
  }
  return out;
}

struct TemplateSlot {
  int x = 0, y = 0, w = 0, h = 0;
  ComponentKind kind = ComponentKind::kTitle;
};

struct AdTemplate {
  int id = 0;
  int canvas_w = 0, canvas_h = 0;
  std::vector<TemplateSlot> slots;

  double fill_ratio() const {
    long area = 0;
    for (const auto& s : slots) area += static_cast<long>(s.w) * s.h;
    return canvas_w > 0 && canvas_h > 0
               ? static_cast<double>(area) / (static_cast<double>(canvas_w) * canvas_h)
               : 0.0;
  }

  std::string geometry_signature() const {
    std::vector<std::string> parts;
    for (const auto& s : slots)
      parts.push_back(std::to_string(s.x) + "," + std::to_string(s.y) + "," + std::to_string(s.w) +
                      "," + std::to_string(s.h) + "," +
                      std::string(component_kind_name(s.kind)));
    std::sort(parts.begin(), parts.end());
    std::string sig;
    for (const auto& p : parts) sig += p + ";";
    return sig;
  }
};

struct TemplateRules {
  int min_margin = 1;  // slots are flush or at least this far apart
};

/// Design-rule check: slots inside the canvas, pairwise non-overlapping,
/// exactly one title, title strictly above any description, and no sliver
/// gaps thinner than min_margin between facing slots.
inline bool template_valid(const AdTemplate& t, const TemplateRules& rules = {},
                           std::string* why = nullptr) {
  auto fail = [&](const char* reason) {
    if (why) *why = reason;
    return false;
  };
  int titles = 0;
  for (const auto& s : t.slots) {
    if (s.w <= 0 || s.h <= 0) return fail("empty slot");
    if (s.x < 0 || s.y < 0 || s.x + s.w > t.canvas_w || s.y + s.h > t.canvas_h)
      return fail("slot outside canvas");
    if (s.kind == ComponentKind::kTitle) titles++;
  }
  if (titles != 1) return fail("exactly one title slot required");
  for (const auto& s : t.slots) {
    if (s.kind != ComponentKind::kDescription) continue;
    for (const auto& title : t.slots)
      if (title.kind == ComponentKind::kTitle && title.y + title.h > s.y)
        return fail("title must sit above the description");
  }
  for (size_t i = 0; i < t.slots.size(); ++i)
    for (size_t j = i + 1; j < t.slots.size(); ++j) {
      const auto& a = t.slots[i];
      const auto& b = t.slots[j];
      const bool overlap =
          a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
      if (overlap) return fail("overlapping slots");
      const int gap_x = std::max(b.x - (a.x + a.w), a.x - (b.x + b.w));
      const int gap_y = std::max(b.y - (a.y + a.h), a.y - (b.y + b.h));
      // A sliver: separated by less than the margin on one axis while the
      // projections overlap on the other.
      if (gap_x > 0 && gap_x < rules.min_margin && gap_y < 0) return fail("sliver gap");
      if (gap_y > 0 && gap_y < rules.min_margin && gap_x < 0) return fail("sliver gap");
    }
  return true;
}

/// Packs components under several insertion orders (title-led orders first so
/// the title lands on top), validates design rules, dedupes by geometry.
inline std::vector<AdTemplate> generate_templates(int canvas_w, int canvas_h,
                                                  const std::vector<Component>& components,
                                                  int max_templates,
                                                  const TemplateRules& rules = {}) {
  const bool has_title = std::any_of(components.begin(), components.end(),
                                     [](const Component& c) { return c.kind == ComponentKind::kTitle; });
  const bool has_desc = std::any_of(components.begin(), components.end(), [](const Component& c) {
    return c.kind == ComponentKind::kDescription;
  });
  if (!has_title || !has_desc)
    throw std::invalid_argument("template generation needs a title and a description component");
  {
    // The canvas must at least fit a stacked title + description.
    const Component* title = nullptr;
    const Component* desc = nullptr;
    for (const auto& c : components) {
      if (c.kind == ComponentKind::kTitle && !title) title = &c;
      if (c.kind == ComponentKind::kDescription && !desc) desc = &c;
    }
    if (std::max(title->w, desc->w) > canvas_w || title->h + desc->h > canvas_h)
      throw std::invalid_argument("canvas cannot fit title plus description");
  }

  // One component per kind at most per template run, except repeatable kinds.
  auto dedupe_components = [&](bool keep_repeats) {
    std::vector<RectSize> rects;
    std::vector<int> comp_of_rect;
    std::map<ComponentKind, int> seen;
    for (size_t i = 0; i < components.size(); ++i) {
      const auto& c = components[i];
      const bool repeatable =
          c.kind == ComponentKind::kImage || c.kind == ComponentKind::kSitelinkRow;
      if (!repeatable || !keep_repeats) {
        if (seen.count(c.kind)) continue;
        seen[c.kind] = 1;
      }
      rects.push_back({c.w, c.h});
      comp_of_rect.push_back(static_cast<int>(i));
    }
    return std::make_pair(rects, comp_of_rect);
  };

  std::vector<AdTemplate> out;
  std::set<std::string> seen_geometry;
  for (bool keep_repeats : {true, false}) {
    auto [rects, comp_of_rect] = dedupe_components(keep_repeats);
    // Title-led order: title first, description second, the rest by area.
    std::vector<int> title_led;
    {
      std::vector<int> rest;
      int title_i = -1, desc_i = -1;
      for (size_t i = 0; i < rects.size(); ++i) {
        const auto kind = components[static_cast<size_t>(comp_of_rect[i])].kind;
        if (kind == ComponentKind::kTitle && title_i < 0)
          title_i = static_cast<int>(i);
        else if (kind == ComponentKind::kDescription && desc_i < 0)
          desc_i = static_cast<int>(i);
        else
          rest.push_back(static_cast<int>(i));
      }
      std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) {
        return rects[static_cast<size_t>(a)].w * rects[static_cast<size_t>(a)].h >
               rects[static_cast<size_t>(b)].w * rects[static_cast<size_t>(b)].h;
      });
      title_led.push_back(title_i);
      title_led.push_back(desc_i);
      title_led.insert(title_led.end(), rest.begin(), rest.end());
    }

    auto consider = [&](const std::vector<Placement>& placements) {
      AdTemplate t;
      t.canvas_w = canvas_w;
      t.canvas_h = canvas_h;
      for (const auto& p : placements)
        t.slots.push_back({p.x, p.y, p.w, p.h,
                           components[static_cast<size_t>(comp_of_rect[static_cast<size_t>(p.item)])].kind});
      if (!template_valid(t, rules)) return;
      const auto sig = t.geometry_signature();
      if (!seen_geometry.insert(sig).second) return;
      t.id = static_cast<int>(out.size());
      out.push_back(std::move(t));
    };

    {
      // Title-led: rects reordered explicitly, then packed in given order.
      std::vector<RectSize> reordered;
      std::vector<int> remap;
      for (int i : title_led) {
        reordered.push_back(rects[static_cast<size_t>(i)]);
        remap.push_back(comp_of_rect[static_cast<size_t>(i)]);
      }
      auto placements = maxrects_pack(canvas_w, canvas_h, reordered, PackOrder::kGiven);
      for (auto& p : placements) p.item = title_led[static_cast<size_t>(p.item)];
      consider(placements);
    }
    for (PackOrder order : kAllPackOrders) {
      if (order == PackOrder::kGiven) continue;
      consider(maxrects_pack(canvas_w, canvas_h, rects, order));
    }
    if (static_cast<int>(out.size()) >= max_templates) break;
  }
  if (static_cast<int>(out.size()) > max_templates) out.resize(static_cast<size_t>(max_templates));
  return out;
}

struct AdFormat {
  int id = 0;
  int template_id = 0;
  std::vector<std::pair<int, int>> assignment;  // slot index -> component id
  ComponentCounts counts{};
};

/// Fills every slot with a distinct compatible component; templates with an
/// unfillable slot yield no format. Multiple components per kind fan out into
/// capped variants.
inline std::vector<AdFormat> enumerate_formats(const std::vector<AdTemplate>& templates,
                                               const std::vector<Component>& components,
                                               int max_formats) {
  std::vector<AdFormat> out;
  for (const auto& t : templates) {
    std::vector<std::vector<int>> choices(t.slots.size());
    bool fillable = true;
    for (size_t s = 0; s < t.slots.size() && fillable; ++s) {
      for (const auto& c : components)
        if (c.kind == t.slots[s].kind && c.w <= t.slots[s].w && c.h <= t.slots[s].h)
          choices[s].push_back(c.id);
      fillable = !choices[s].empty();
    }
    if (!fillable) continue;

    // Depth-first over slot choices with distinct components, capped.
    std::vector<int> pick(t.slots.size(), -1);
    std::set<int> used;
    const int budget_per_template = std::max(1, max_formats / std::max<int>(1, static_cast<int>(templates.size())));
    int emitted = 0;
    auto dfs = [&](auto&& self, size_t slot) -> void {
      if (emitted >= budget_per_template || static_cast<int>(out.size()) >= max_formats) return;
      if (slot == t.slots.size()) {
        AdFormat f;
        f.id = static_cast<int>(out.size());
        f.template_id = t.id;
        for (size_t s = 0; s < pick.size(); ++s) {
          f.assignment.push_back({static_cast<int>(s), pick[s]});
          f.counts[static_cast<size_t>(components[static_cast<size_t>(pick[s])].kind)]++;
        }
        out.push_back(std::move(f));
        emitted++;
        return;
      }
      for (int cid : choices[slot]) {
        if (used.count(cid)) continue;
        used.insert(cid);
        pick[slot] = cid;
        self(self, slot + 1);
        used.erase(cid);
        if (emitted >= budget_per_template) return;
      }
    };
    dfs(dfs, 0);
    if (static_cast<int>(out.size()) >= max_formats) break;
  }
  return out;
}

struct EvalContext {
  const Query* query = nullptr;
  const Ad* ad = nullptr;
  int advertiser_id = 0;
  int vertical = 0;
};

struct ScoredTemplate {
  int template_id = 0;
  double mean_pctr = 0.0;
};

/// Template score: mean predicted CTR over sampled contexts, using the
/// template's slot-kind counts as the format signal. Invalid templates are
/// excluded before scoring.
inline std::vector<ScoredTemplate> evaluate_templates(const std::vector<AdTemplate>& templates,
                                                      const ResponseModel& model,
                                                      const std::vector<EvalContext>& contexts,
                                                      const TemplateRules& rules = {}) {
  std::vector<ScoredTemplate> out;
  for (const auto& t : templates) {
    if (!template_valid(t, rules)) continue;
    ComponentCounts counts{};
    for (const auto& s : t.slots) counts[static_cast<size_t>(s.kind)]++;
    double total = 0.0;
    for (const auto& c : contexts) {
      const auto fv = make_features(*c.query, *c.ad, c.advertiser_id, c.vertical, counts,
                                    model.feature_config());
      total += model.predict_ctr(fv);
    }
    out.push_back({t.id, contexts.empty() ? 0.0 : total / static_cast<double>(contexts.size())});
  }
  std::sort(out.begin(), out.end(), [](const ScoredTemplate& a, const ScoredTemplate& b) {
    if (a.mean_pctr != b.mean_pctr) return a.mean_pctr > b.mean_pctr;
    return a.template_id < b.template_id;
  });
  return out;
}

/// eCPM = CPA * CVR * CTR; argmax with ties broken by format id.
inline const AdFormat& select_format(const std::vector<AdFormat>& formats, Money target_cpa,
                                     const EvalContext& context, const ResponseModel& model,
                                     int conversion_type) {
  if (formats.empty()) throw std::invalid_argument("select_format: empty format list");
  const AdFormat* best = nullptr;
  double best_score = -1.0;
  for (const auto& f : formats) {
    const auto fv = make_features(*context.query, *context.ad, context.advertiser_id,
                                  context.vertical, f.counts, model.feature_config());
    const double score =
        money_units(target_cpa) * model.predict_cvr(fv, conversion_type) * model.predict_ctr(fv);
    if (score > best_score || (score == best_score && best && f.id < best->id)) {
      best = &f;
      best_score = score;
    }
  }
  return *best;
}

}  // namespace adsmarket
