#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The Priority Pass Simulator Authors
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
#include <limits>
#include <string_view>
#include <vector>

namespace ppass {

enum class AllocationMode : std::uint8_t
{
  free_top_vot,
  market,
  market_redistribute,
};

constexpr std::string_view to_string(AllocationMode m)
{
  switch (m)
  {
  case AllocationMode::free_top_vot:
    return "free_top_vot";
  case AllocationMode::market:
    return "market";
  case AllocationMode::market_redistribute:
    return "market_redistribute";
  }
  return "?";
}

/// Who holds the pass after allocation, and the money that moved.
/// Participant i is consumer i, which is vehicle i when the population was
/// synthesized for a vehicle list.
struct EntitlementAllocation
{
  AllocationMode mode{AllocationMode::free_top_vot};
  double price{0.0};  // +inf when nobody buys
  std::vector<std::uint8_t> bought;
  std::vector<double> paid;
  std::vector<double> transfer;
  double revenue{0.0};
  double municipal_revenue{0.0};

  std::size_t population() const
  {
    return bought.size();
  }

  std::size_t buyer_count() const
  {
    std::size_t n = 0;
    for (auto b : bought)
    {
      n += b;
    }
    return n;
  }

  double realized_share() const
  {
    return bought.empty() ? 0.0
                          : static_cast<double>(buyer_count()) / static_cast<double>(bought.size());
  }
};

/// Number of pass holders targeted for share `gamma` of `n` participants.
inline std::size_t target_count(double gamma, std::size_t n)
{
  return static_cast<std::size_t>(std::llround(gamma * static_cast<double>(n)));
}

}  // namespace ppass
