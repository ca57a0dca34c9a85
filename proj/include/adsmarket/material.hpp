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

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adsmarket {

/// Raw assets an advertiser supplies for ad creation.
enum class MaterialKind {
  kTextTitle = 0,
  kTextDescription,
  kImage,
  kAppPackage,
  kPhone,
  kProductLink,
  kSitelink,
};
inline constexpr int kNumMaterialKinds = 7;

/// Functional units materials are turned into; templates carry one slot kind
/// per slot and formats fill slots with components of the matching kind.
enum class ComponentKind {
  kTitle = 0,
  kDescription,
  kImage,
  kCallButton,
  kDownloadButton,
  kSitelinkRow,
  kProductCard,
};
inline constexpr int kNumComponentKinds = 7;

inline std::string_view material_kind_name(MaterialKind k) {
  static constexpr std::array<std::string_view, kNumMaterialKinds> names = {
      "text-title", "text-description", "image",        "app-package",
      "phone",      "product-link",     "sitelink"};
  return names[static_cast<size_t>(k)];
}

inline MaterialKind material_kind_from_name(std::string_view name) {
  for (int i = 0; i < kNumMaterialKinds; ++i) {
    if (material_kind_name(static_cast<MaterialKind>(i)) == name)
      return static_cast<MaterialKind>(i);
  }
  throw std::invalid_argument("unknown material kind: " + std::string(name));
}

inline std::string_view component_kind_name(ComponentKind k) {
  static constexpr std::array<std::string_view, kNumComponentKinds> names = {
      "title",           "description",  "image",       "call-button",
      "download-button", "sitelink-row", "product-card"};
  return names[static_cast<size_t>(k)];
}

struct Material {
  MaterialKind kind = MaterialKind::kTextTitle;
  std::string payload;  // text content, link target, phone digits, ...
  int width = 0;        // intrinsic size hints; required for images
  int height = 0;

  void validate() const {
    if (payload.empty()) throw std::invalid_argument("material payload empty");
    if (kind == MaterialKind::kImage && (width <= 0 || height <= 0))
      throw std::invalid_argument("image material requires width/height");
  }
};

/// Per-format component-kind counts; the market ground truth prices format
/// quality as a linear function of these.
using ComponentCounts = std::array<int, kNumComponentKinds>;

inline ComponentCounts default_format_counts() {
  ComponentCounts c{};
  c[static_cast<size_t>(ComponentKind::kTitle)] = 1;
  c[static_cast<size_t>(ComponentKind::kDescription)] = 1;
  return c;
}

}  // namespace adsmarket
