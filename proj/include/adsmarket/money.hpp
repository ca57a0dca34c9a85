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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace adsmarket {

/// Money is carried as integer micro-units so ledger conservation checks are
/// exact; user-facing values are decimal units.
using Money = int64_t;

inline constexpr Money kMicrosPerUnit = 1'000'000;

inline Money money_from_units(double units) {
  const double micros = units * static_cast<double>(kMicrosPerUnit);
  if (!std::isfinite(micros)) throw std::invalid_argument("money: non-finite amount");
  return static_cast<Money>(std::llround(micros));
}

inline double money_units(Money m) {
  return static_cast<double>(m) / static_cast<double>(kMicrosPerUnit);
}

/// Fixed-point decimal rendering, e.g. 1250000 -> "1.250000".
inline std::string money_str(Money m) {
  const bool neg = m < 0;
  const uint64_t a = neg ? static_cast<uint64_t>(-(m + 1)) + 1 : static_cast<uint64_t>(m);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%s%llu.%06llu", neg ? "-" : "",
                static_cast<unsigned long long>(a / kMicrosPerUnit),
                static_cast<unsigned long long>(a % kMicrosPerUnit));
  return buf;
}

inline Money money_parse(const std::string& s) {
  size_t pos = 0;
  const double units = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("money: trailing characters in '" + s + "'");
  return money_from_units(units);
}

}  // namespace adsmarket
