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
#include "ppass/market.hpp"
#include "ppass/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ppass {

enum class Objective : std::uint8_t
{
  total_travel_time,
  throughput,
  queue,
  delay,
  user_benefit,
  system_benefit,
};

inline char const *to_string(Objective o)
{
  switch (o)
  {
  case Objective::total_travel_time:
    return "total_travel_time";
  case Objective::throughput:
    return "throughput";
  case Objective::queue:
    return "queue";
  case Objective::delay:
    return "delay";
  case Objective::user_benefit:
    return "user_benefit";
  case Objective::system_benefit:
    return "system_benefit";
  }
  return "?";
}

inline Objective parse_objective(std::string_view s)
{
  for (auto o : {Objective::total_travel_time, Objective::throughput, Objective::queue, Objective::delay,
                 Objective::user_benefit, Objective::system_benefit})
  {
    if (s == to_string(o))
    {
      return o;
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown objective '" + std::string(s) + "'");
}

/// Whether smaller objective values are better.
inline bool minimized(Objective o)
{
  return o == Objective::total_travel_time || o == Objective::queue || o == Objective::delay;
}

struct ParamAxis
{
  std::string name;
  std::vector<double> values;
};

/// Values lo, lo + step, ..., hi, rounded to the step's decimal lattice.
inline std::vector<double> linear_grid(double lo, double hi, double step)
{
  if (!(step > 0.0) || hi < lo)
  {
    throw Error(ErrorKind::invalid_argument, "grid needs step > 0 and hi >= lo");
  }
  std::vector<double> out;
  auto const n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i)
  {
    out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  return out;
}

struct SearchSpace
{
  std::vector<ParamAxis> axes;
  Objective objective{Objective::total_travel_time};
  std::vector<std::uint64_t> seeds;

  std::size_t size() const
  {
    std::size_t n = axes.empty() ? 0 : 1;
    for (auto const &a : axes)
    {
      n *= a.values.size();
    }
    return n;
  }

  /// Grid point by index; the first axis varies slowest.
  std::vector<double> point(std::size_t index) const
  {
    std::vector<double> p(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;)
    {
      auto const &v = axes[k].values;
      p[k]          = v[index % v.size()];
      index /= v.size();
    }
    return p;
  }
};

inline void validate(SearchSpace const &s)
{
  if (s.axes.empty())
  {
    throw Error(ErrorKind::invalid_argument, "search space has no parameters");
  }
  for (auto const &a : s.axes)
  {
    if (a.values.empty())
    {
      throw Error(ErrorKind::invalid_argument, "parameter '" + a.name + "' has an empty grid");
    }
  }
  if (s.seeds.empty())
  {
    throw Error(ErrorKind::invalid_argument, "search space needs at least one seed");
  }
}

/// Named metrics of one run; ordered so exports are stable.
using MetricRow = std::map<std::string, double>;

struct SeedEvaluation
{
  std::uint64_t seed{};
  MetricRow metrics;
};

struct SweepResult
{
  std::vector<double> point;
  std::vector<SeedEvaluation> per_seed;  // ascending seed
  double mean{};                         // objective
  double sd{};
  MetricRow means;
};

struct GridSearchResult
{
  std::vector<std::string> names;
  Objective objective{};
  std::vector<SweepResult> table;
  std::size_t best{0};

  SweepResult const &best_result() const
  {
    return table.at(best);
  }

  /// Best value of a named parameter.
  double best_value(std::string_view name) const
  {
    for (std::size_t k = 0; k < names.size(); ++k)
    {
      if (names[k] == name)
      {
        return best_result().point[k];
      }
    }
    throw Error(ErrorKind::invalid_argument, "no parameter '" + std::string(name) + "'");
  }
};

using Evaluator = std::function<MetricRow(std::vector<double> const &point, std::uint64_t seed)>;

namespace detail {

inline void aggregate(SweepResult &r, Objective objective)
{
  std::sort(r.per_seed.begin(), r.per_seed.end(),
            [](SeedEvaluation const &a, SeedEvaluation const &b) { return a.seed < b.seed; });
  std::string const key = to_string(objective);
  double const n        = static_cast<double>(r.per_seed.size());
  for (auto const &s : r.per_seed)
  {
    for (auto const &[k, v] : s.metrics)
    {
      r.means[k] += v;
    }
  }
  for (auto &[k, v] : r.means)
  {
    v /= n;
  }
  auto it = r.means.find(key);
  if (it == r.means.end())
  {
    throw Error(ErrorKind::invalid_argument, "evaluator did not report '" + key + "'");
  }
  r.mean = it->second;
  if (r.per_seed.size() > 1)
  {
    double v = 0.0;
    for (auto const &s : r.per_seed)
    {
      double const d = s.metrics.at(key) - r.mean;
      v += d * d;
    }
    r.sd = std::sqrt(v / (n - 1.0));
  }
}

}  // namespace detail

/// Evaluates every grid point with every seed and picks the point with the
/// best seed-mean objective. Equal means go to the lower mean total travel
/// time, then to the lexicographically smaller parameter vector.
inline GridSearchResult grid_search(SearchSpace const &space, Evaluator const &evaluate, unsigned jobs = 1)
{
  validate(space);
  std::size_t const points = space.size();
  std::size_t const seeds  = space.seeds.size();
  GridSearchResult out;
  out.objective = space.objective;
  for (auto const &a : space.axes)
  {
    out.names.push_back(a.name);
  }
  out.table.resize(points);
  for (std::size_t i = 0; i < points; ++i)
  {
    out.table[i].point = space.point(i);
    out.table[i].per_seed.resize(seeds);
  }
  parallel_for(points * seeds, jobs, [&](std::size_t job) {
    std::size_t const i = job / seeds;
    std::size_t const s = job % seeds;
    auto &slot          = out.table[i].per_seed[s];
    slot.seed           = space.seeds[s];
    slot.metrics        = evaluate(out.table[i].point, slot.seed);
  });
  for (auto &r : out.table)
  {
    detail::aggregate(r, space.objective);
  }

  bool const lower = minimized(space.objective);
  auto ttt         = [](SweepResult const &r) {
    auto it = r.means.find("total_travel_time");
    return it == r.means.end() ? 0.0 : it->second;
  };
  auto better = [&](SweepResult const &a, SweepResult const &b) {
    if (a.mean != b.mean)
    {
      return lower ? a.mean < b.mean : a.mean > b.mean;
    }
    if (ttt(a) != ttt(b))
    {
      return ttt(a) < ttt(b);
    }
    return a.point < b.point;
  };
  for (std::size_t i = 1; i < points; ++i)
  {
    if (better(out.table[i], out.table[out.best]))
    {
      out.best = i;
    }
  }
  return out;
}

struct PrioritySelectionOptions
{
  double flow{250.0};               // veh/h per entrance
  double total_flow{3000.0};        // veh/h into the network
  double mean_trip_km{0.5};         // km
  double efficiency_budget{0.05};   // allowed relative loss of flow and speed
  AllocationMode mode{AllocationMode::market_redistribute};
  double retention{0.0};
};

struct PriorityCandidate
{
  double gamma{};
  double tau{};
  double price{};
  double realized_gamma{};
  double c_r{};         // $/km, net of payments leaving the users
  double C_r{};         // $/h
  double flow_ratio{};  // network flow relative to the reference
  double speed_ratio{};
  bool user_ok{};
  bool efficiency_ok{};

  bool feasible() const
  {
    return user_ok && efficiency_ok;
  }
};

struct PrioritySelection
{
  PriorityCandidate best;
  std::vector<PriorityCandidate> candidates;
  bool null_point{false};  // nothing feasible, prioritization switched off
};

/// Evaluates one (gamma, tau) response point on a population.
inline PriorityCandidate evaluate_priority_point(DelayPoint const &d, DelayPoint const &reference,
                                                 std::span<const Consumer> population,
                                                 PrioritySelectionOptions const &o)
{
  PriorityCandidate c;
  c.gamma = d.gamma;
  c.tau   = d.tau;
  auto const a = allocate(population, o.mode, d.gamma, d, o.retention);
  auto const w = evaluate_allocation(population, a, d);
  c.price          = a.mode == AllocationMode::free_top_vot ? 0.0 : a.price;
  c.realized_gamma = w.gamma;
  c.c_r            = w.net_c_r;
  c.C_r            = system_benefit_Cr(c.c_r, o.total_flow, o.mean_trip_km);
  c.flow_ratio     = reference.network_flow > 0.0 ? d.network_flow / reference.network_flow : 1.0;
  c.speed_ratio    = reference.mean_speed > 0.0 ? d.mean_speed / reference.mean_speed : 1.0;
  c.user_ok        = c.c_r > 0.0;
  c.efficiency_ok  = c.flow_ratio >= 1.0 - o.efficiency_budget && c.speed_ratio >= 1.0 - o.efficiency_budget;
  return c;
}

/// Maximizes the system benefit over the simulated (gamma, tau) grid at the
/// nearest flow, subject to a positive average user benefit and network
/// flow and speed within the efficiency budget of the reference controller.
/// When no grid point qualifies the result is the null point gamma = 0.
inline PrioritySelection select_priority_params(DelayResponse const &response,
                                                std::span<const Consumer> population,
                                                PrioritySelectionOptions const &o)
{
  if (response.empty())
  {
    throw Error(ErrorKind::infeasible, "no delay response to select from");
  }
  auto const reference = response.reference(o.flow);
  if (!reference)
  {
    throw Error(ErrorKind::infeasible, "no reference efficiency at flow " + std::to_string(o.flow));
  }
  if (!(o.efficiency_budget >= 0.0))
  {
    throw Error(ErrorKind::invalid_argument, "efficiency budget must be nonnegative");
  }
  PrioritySelection sel;
  std::optional<std::size_t> best;
  for (auto const &d : response.grid(o.flow))
  {
    sel.candidates.push_back(evaluate_priority_point(d, *reference, population, o));
    auto const &c = sel.candidates.back();
    if (!c.feasible())
    {
      continue;
    }
    if (!best || c.C_r > sel.candidates[*best].C_r)
    {
      best = sel.candidates.size() - 1;
    }
  }
  if (best)
  {
    sel.best = sel.candidates[*best];
    return sel;
  }
  sel.null_point         = true;
  sel.best               = PriorityCandidate{};
  sel.best.flow_ratio    = 1.0;
  sel.best.speed_ratio   = 1.0;
  sel.best.efficiency_ok = true;
  return sel;
}

/// One hour of a city-wide day.
struct CityHour
{
  int hour{};
  double trips{};
  double benefit_per_user{};  // $ per trip
  double buyers{};
  double price{};  // $ per buyer
};

struct CityInfo
{
  int intersections{2862};
  double trips_per_day{5958060.0};
};

struct CitySummary
{
  double welfare_per_day{};
  double revenue_per_day{};
  double mean_price{};
  double prioritized_count{};
  double trips_per_day{};
  double benefit_per_user{};  // welfare per trip
};

/// Daily welfare and revenue from an hourly table covering hours 0..23.
inline CitySummary extrapolate_city(std::span<const CityHour> hours, double retention)
{
  std::vector<CityHour const *> by_hour(24, nullptr);
  for (auto const &h : hours)
  {
    if (h.hour < 0 || h.hour >= 24)
    {
      throw Error(ErrorKind::invalid_argument, "hour " + std::to_string(h.hour) + " outside 0..23");
    }
    by_hour[static_cast<std::size_t>(h.hour)] = &h;
  }
  CitySummary s;
  double paid = 0.0;
  for (int h = 0; h < 24; ++h)
  {
    auto const *row = by_hour[static_cast<std::size_t>(h)];
    if (!row)
    {
      throw Error(ErrorKind::profile_gap, "hour " + std::to_string(h) + " is missing from the daily table");
    }
    s.welfare_per_day += row->benefit_per_user * row->trips;
    s.trips_per_day += row->trips;
    s.prioritized_count += row->buyers;
    paid += row->buyers * row->price;
  }
  s.revenue_per_day  = paid * retention;
  s.mean_price       = s.prioritized_count > 0.0 ? paid / s.prioritized_count : 0.0;
  s.benefit_per_user = s.trips_per_day > 0.0 ? s.welfare_per_day / s.trips_per_day : 0.0;
  return s;
}

/// Hourly trip counts from hourly weights scaled to the daily total.
inline std::vector<double> hourly_trips(std::span<const double> weights, double trips_per_day)
{
  if (weights.size() != 24)
  {
    throw Error(ErrorKind::profile_gap, "daily profile needs 24 hourly weights, got " +
                                            std::to_string(weights.size()));
  }
  double sum = 0.0;
  for (double w : weights)
  {
    if (!(w >= 0.0))
    {
      throw Error(ErrorKind::invalid_argument, "daily profile weights must be nonnegative");
    }
    sum += w;
  }
  if (!(sum > 0.0))
  {
    throw Error(ErrorKind::invalid_argument, "daily profile is all zero");
  }
  std::vector<double> out;
  for (double w : weights)
  {
    out.push_back(trips_per_day * w / sum);
  }
  return out;
}

}  // namespace ppass
