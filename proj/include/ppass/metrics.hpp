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

#include "ppass/control.hpp"
#include "ppass/engine.hpp"
#include "ppass/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <vector>

namespace ppass {

/// Delay per travelled kilometre of a completed trip, s/km.
inline double delay_per_km(TripRecord const &trip)
{
  return trip.delay() / (trip.route_length / 1000.0);
}

struct GroupStat
{
  long count{0};
  double mean{0.0};
  double sd{0.0};
};

inline GroupStat summarize(std::vector<double> const &xs)
{
  GroupStat g;
  g.count = static_cast<long>(xs.size());
  if (xs.empty())
  {
    return g;
  }
  double s = 0.0;
  for (double x : xs)
  {
    s += x;
  }
  g.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1)
  {
    double v = 0.0;
    for (double x : xs)
    {
      v += (x - g.mean) * (x - g.mean);
    }
    g.sd = std::sqrt(v / static_cast<double>(xs.size() - 1));
  }
  return g;
}

/// Delay per km of completed trips in the recording window, split by
/// entitlement. Unfinished trips are left out.
struct GroupDelays
{
  GroupStat all;
  GroupStat entitled;
  GroupStat not_entitled;
};

inline GroupDelays group_delays(SimResult const &r)
{
  std::vector<double> all, pp, npp;
  for (auto const &t : r.trips)
  {
    if (!r.in_window(t) || !t.completed())
    {
      continue;
    }
    double const d = delay_per_km(t);
    all.push_back(d);
    (t.entitled ? pp : npp).push_back(d);
  }
  return {summarize(all), summarize(pp), summarize(npp)};
}

struct Efficiency
{
  double throughput{0.0};         // veh/h
  double completion_rate{1.0};    // fraction
  double mean_queue{0.0};         // veh
  double mean_delay{0.0};         // s/km
  double total_travel_time{0.0};  // veh s
};

/// Window metrics over the cohort of vehicles spawned during the recording
/// window. Unfinished cohort members add their elapsed time to the total
/// travel time but not to the delay mean.
inline Efficiency aggregate_efficiency(SimResult const &r)
{
  if (!(r.record > 0.0))
  {
    throw Error(ErrorKind::invalid_argument, "recording window is empty");
  }
  double const end = r.warmup + r.record;
  Efficiency e;
  long spawned = 0;
  long done    = 0;
  std::vector<double> delays;
  for (auto const &t : r.trips)
  {
    if (!r.in_window(t))
    {
      continue;
    }
    ++spawned;
    if (t.completed() && *t.arrive <= end)
    {
      ++done;
      e.total_travel_time += *t.arrive - t.spawn;
      delays.push_back(delay_per_km(t));
    }
    else
    {
      e.total_travel_time += end - t.spawn;
    }
  }
  e.throughput      = static_cast<double>(done) / (r.record / 3600.0);
  e.completion_rate = spawned > 0 ? static_cast<double>(done) / static_cast<double>(spawned) : 1.0;
  e.mean_queue      = r.window_queue_integral / r.record;
  e.mean_delay      = summarize(delays).mean;
  return e;
}

/// Network-level flow and speed over the recording window.
struct WindowTraffic
{
  double flow{0.0};          // exits, veh/h
  double mean_speed{0.0};    // m/s
  double accumulation{0.0};  // veh
};

inline WindowTraffic window_traffic(SimResult const &r)
{
  WindowTraffic w;
  w.flow         = static_cast<double>(r.window_exits) * 3600.0 / r.record;
  w.accumulation = r.window_vehicle_time / r.record;
  w.mean_speed   = r.window_vehicle_time > 0.0 ? r.window_distance / r.window_vehicle_time : r.speed_limit;
  return w;
}

enum class SignalColor : std::uint8_t
{
  green,
  red,
};

struct SignalDuration
{
  int intersection{};
  int phase{};
  double duration{};
  SignalColor color{};
};

struct SignalStats
{
  double switches_per_intersection_hour{0.0};
  std::vector<SignalDuration> durations;

  std::vector<double> of(SignalColor c) const
  {
    std::vector<double> out;
    for (auto const &d : durations)
    {
      if (d.color == c)
      {
        out.push_back(d.duration);
      }
    }
    return out;
  }
};

/// Switch rate and complete green/red intervals inside [from, to). A red
/// interval of a phase runs from the transition that ends its green to its
/// next green start. Intersections are the ones appearing in the log unless
/// `intersections` is given.
inline SignalStats signal_stats(std::vector<SignalEvent> const &log, double from, double to,
                                int intersections = -1)
{
  std::map<int, std::vector<SignalEvent>> by_node;
  for (auto const &e : log)
  {
    by_node[e.intersection].push_back(e);
  }

  SignalStats s;
  long switches = 0;
  for (auto &[node, events] : by_node)
  {
    std::stable_sort(events.begin(), events.end(),
                     [](auto const &a, auto const &b) { return a.clock < b.clock; });
    std::array<std::optional<long>, kPhaseCount> red_since{};
    std::optional<SignalEvent> prev;
    int green_phase = -1;
    for (auto const &e : events)
    {
      if (e.phase < 0 || e.phase >= kPhaseCount)
      {
        throw Error(ErrorKind::malformed_log, "phase id out of range");
      }
      if (prev)
      {
        if (prev->kind == e.kind)
        {
          throw Error(ErrorKind::malformed_log, "consecutive " + std::string(to_string(e.kind)) +
                                                    " events at intersection " + std::to_string(node));
        }
        if (e.kind == SignalEventKind::green_start && e.phase != prev->phase)
        {
          throw Error(ErrorKind::malformed_log, "green start does not match transition target");
        }
        if (e.clock < prev->clock)
        {
          throw Error(ErrorKind::malformed_log, "events out of order");
        }
      }
      if (e.kind == SignalEventKind::transition_start)
      {
        if (e.clock >= from && e.clock < to)
        {
          ++switches;
        }
        if (green_phase >= 0)
        {
          if (prev && prev->clock >= from && e.clock <= to)
          {
            s.durations.push_back({node, green_phase, static_cast<double>(e.clock - prev->clock),
                                   SignalColor::green});
          }
          red_since[static_cast<std::size_t>(green_phase)] = e.clock;
        }
        green_phase = -1;
      }
      else
      {
        auto &since = red_since[static_cast<std::size_t>(e.phase)];
        if (since && *since >= from && e.clock <= to)
        {
          s.durations.push_back({node, e.phase, static_cast<double>(e.clock - *since), SignalColor::red});
        }
        since.reset();
        green_phase = e.phase;
      }
      prev = e;
    }
  }
  int const n = intersections >= 0 ? intersections : static_cast<int>(by_node.size());
  double const hours = (to - from) / 3600.0;
  s.switches_per_intersection_hour =
      (n > 0 && hours > 0.0) ? static_cast<double>(switches) / (n * hours) : 0.0;
  return s;
}

/// Ranks starting at 1, ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> xs)
{
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> rank(xs.size());
  for (std::size_t i = 0; i < idx.size();)
  {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]])
    {
      ++j;
    }
    double const r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
    {
      rank[idx[k]] = r;
    }
    i = j + 1;
  }
  return rank;
}

inline double pearson(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size() || x.size() < 2)
  {
    throw Error(ErrorKind::invalid_argument, "correlation needs two equal-length samples of size >= 2");
  }
  double const n  = static_cast<double>(x.size());
  double const mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double const my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
}

/// Spearman rank correlation with average ranks for ties; 0 if either
/// sample is constant.
inline double spearman(std::span<const double> x, std::span<const double> y)
{
  auto const rx = average_ranks(x);
  auto const ry = average_ranks(y);
  return pearson(rx, ry);
}

}  // namespace ppass
