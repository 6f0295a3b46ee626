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

#include "ppass/allocation.hpp"
#include "ppass/error.hpp"
#include "ppass/netgrid.hpp"
#include "ppass/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

namespace ppass {

struct Vehicle
{
  int id{};
  int entrance{};
  int route{};  // RouteTable id
  double spawn_time{};
  bool entitled{};
  double vot{};  // $/h
  std::optional<double> depart_time;
  std::optional<double> arrival_time;
};

/// Piecewise-constant inflow per entrance. Segment i covers
/// [segments[i].start, segments[i+1].start).
struct FlowProfile
{
  struct Segment
  {
    double start{};
    double flow{};  // veh/h per entrance
  };
  std::vector<Segment> segments;

  static FlowProfile constant(double flow)
  {
    return FlowProfile{{{0.0, flow}}};
  }

  /// start_flow grown by `growth` (0.0863 for +8.63%) every `step` seconds.
  static FlowProfile ramp(double start_flow, double growth, double step, double duration)
  {
    FlowProfile p;
    double flow = start_flow;
    for (double t = 0.0; t < duration; t += step)
    {
      p.segments.push_back({t, flow});
      flow *= 1.0 + growth;
    }
    return p;
  }

  /// One value per hour, the first hour starting at t=0.
  static FlowProfile hourly(std::vector<double> const &flows)
  {
    FlowProfile p;
    for (std::size_t h = 0; h < flows.size(); ++h)
    {
      p.segments.push_back({3600.0 * static_cast<double>(h), flows[h]});
    }
    return p;
  }

  double flow_at(double t) const
  {
    double f = 0.0;
    for (auto const &s : segments)
    {
      if (s.start > t)
      {
        break;
      }
      f = s.flow;
    }
    return f;
  }
};

struct DemandConfig
{
  FlowProfile flow;
  double entitlement_share{0.0};
  double duration{3600.0};
  std::uint64_t seed{1};
};

inline void validate(DemandConfig const &c)
{
  if (!(c.entitlement_share >= 0.0 && c.entitlement_share <= 1.0))
  {
    throw Error(ErrorKind::invalid_argument, "entitlement share must lie in [0, 1]");
  }
  if (!(c.duration >= 0.0))
  {
    throw Error(ErrorKind::invalid_argument, "demand duration must be nonnegative");
  }
  for (auto const &s : c.flow.segments)
  {
    if (!(s.flow >= 0.0))
    {
      throw Error(ErrorKind::invalid_argument, "flow per entrance must be nonnegative");
    }
  }
}

/// Poisson arrivals at every entrance with uniformly drawn routes and
/// Bernoulli(gamma) entitlement. Each entrance draws from its own stream, so
/// adding entrances or changing gamma leaves arrival times and routes as they
/// were. Vehicles come back sorted by spawn time, ids in that order.
inline std::vector<Vehicle> spawn_schedule(DemandConfig const &config, Network const &net,
                                           RouteTable const &routes)
{
  validate(config);
  std::vector<Vehicle> out;
  auto const &segs = config.flow.segments;
  for (int e = 0; e < static_cast<int>(net.entrances.size()); ++e)
  {
    auto const &choices = routes.by_entrance[static_cast<std::size_t>(e)];
    if (choices.empty())
    {
      continue;
    }
    RandomEngine rng = make_stream(config.seed, static_cast<std::uint64_t>(e));
    double t         = 0.0;
    std::size_t seg  = 0;
    while (seg < segs.size() && t < config.duration)
    {
      double const seg_end = seg + 1 < segs.size() ? segs[seg + 1].start : config.duration;
      double const flow    = segs[seg].flow;
      if (flow <= 0.0)
      {
        t = std::max(t, seg_end);
        ++seg;
        continue;
      }
      double const next = t + standard_exponential(rng) * 3600.0 / flow;
      if (next >= seg_end)
      {
        // memoryless: restart the clock at the rate change
        t = seg_end;
        ++seg;
        continue;
      }
      t = next;
      Vehicle v;
      v.entrance   = e;
      v.spawn_time = t;
      v.route      = choices[uniform_index(rng, choices.size())];
      v.entitled   = uniform01(rng) < config.entitlement_share;
      out.push_back(v);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](Vehicle const &a, Vehicle const &b) {
    return a.spawn_time < b.spawn_time ||
           (a.spawn_time == b.spawn_time && a.entrance < b.entrance);
  });
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i].id = static_cast<int>(i);
  }
  return out;
}

/// Overwrites the entitled flags from an allocation over the same population.
inline void assign_entitlement(std::vector<Vehicle> &vehicles, EntitlementAllocation const &allocation)
{
  if (allocation.population() != vehicles.size())
  {
    throw Error(ErrorKind::allocation_size_mismatch,
                "allocation covers " + std::to_string(allocation.population()) +
                    " participants, vehicle list has " + std::to_string(vehicles.size()));
  }
  for (std::size_t i = 0; i < vehicles.size(); ++i)
  {
    vehicles[i].entitled = allocation.bought[i] != 0;
  }
}

}  // namespace ppass
