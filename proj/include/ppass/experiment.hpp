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

#include "ppass/demand.hpp"
#include "ppass/engine.hpp"
#include "ppass/market.hpp"
#include "ppass/metrics.hpp"
#include "ppass/netgrid.hpp"
#include "ppass/optimize.hpp"
#include "ppass/parallel.hpp"

#include <cstdint>
#include <map>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace ppass {

struct GridSpec
{
  int rows{3};
  int cols{3};
  double link_length{100.0};  // m
  int lanes{2};               // per direction
  double speed_limit{13.89};  // m/s
  bool exclude_uturn{true};
};

/// Everything needed to simulate one scenario for any seed.
struct Scenario
{
  GridSpec grid;
  FlowProfile flow{FlowProfile::constant(250.0)};
  double entitlement_share{0.0};
  DynamicsParams dynamics;
  ControllerSpec controller;
  RunOptions run;
};

/// Network and routes built once and shared read-only by every run.
struct Layout
{
  Network net;
  RouteTable routes;

  explicit Layout(GridSpec const &g)
    : net(build_grid(g.rows, g.cols, g.link_length, g.lanes, g.speed_limit))
    , routes(make_route_table(net, g.exclude_uturn))
  {
  }
};

inline std::vector<Vehicle> scenario_vehicles(Layout const &layout, Scenario const &s, std::uint64_t seed)
{
  DemandConfig dc;
  dc.flow              = s.flow;
  dc.entitlement_share = s.entitlement_share;
  dc.duration          = s.run.warmup + s.run.record;
  dc.seed              = seed;
  return spawn_schedule(dc, layout.net, layout.routes);
}

inline SimResult simulate(Layout const &layout, Scenario const &s, std::uint64_t seed,
                          std::optional<std::vector<Vehicle>> vehicles = std::nullopt)
{
  auto r = run_scenario(layout.net, layout.routes,
                        vehicles ? std::move(*vehicles) : scenario_vehicles(layout, s, seed), s.controller,
                        s.dynamics, s.run, seed);
  r.meta.flow              = s.flow.segments.empty() ? 0.0 : s.flow.segments.front().flow;
  r.meta.entitlement_share = s.entitlement_share;
  return r;
}

/// Efficiency, group delays and window traffic of one run under the metric
/// names used by sweeps and objectives.
inline MetricRow metric_row(SimResult const &r)
{
  auto const e = aggregate_efficiency(r);
  auto const g = group_delays(r);
  auto const w = window_traffic(r);
  return {
      {"throughput", e.throughput},
      {"completion_rate", e.completion_rate},
      {"queue", e.mean_queue},
      {"delay", e.mean_delay},
      {"total_travel_time", e.total_travel_time},
      {"delay_pp", g.entitled.mean},
      {"delay_npp", g.not_entitled.mean},
      {"n_pp", static_cast<double>(g.entitled.count)},
      {"n_npp", static_cast<double>(g.not_entitled.count)},
      {"network_flow", w.flow},
      {"mean_speed", w.mean_speed},
      {"accumulation", w.accumulation},
  };
}

/// Scenario with a fixed-cycle or auction parameter point applied. Known
/// names: t_f1, t_f2, t_min, t_auc, tau, gamma, flow.
inline Scenario with_params(Scenario s, std::span<const std::string> names, std::span<const double> point)
{
  for (std::size_t k = 0; k < names.size(); ++k)
  {
    auto const &n = names[k];
    double const v = point[k];
    if (n == "t_f1")
    {
      s.controller.fixed.through_left_green = static_cast<int>(std::lround(v));
    }
    else if (n == "t_f2")
    {
      s.controller.fixed.right_green = static_cast<int>(std::lround(v));
    }
    else if (n == "t_min")
    {
      s.controller.auction.min_green = static_cast<int>(std::lround(v));
    }
    else if (n == "t_auc")
    {
      s.controller.auction.auction_interval = static_cast<int>(std::lround(v));
    }
    else if (n == "tau")
    {
      s.controller.auction.tau = v;
    }
    else if (n == "gamma")
    {
      s.entitlement_share = v;
    }
    else if (n == "flow")
    {
      s.flow = FlowProfile::constant(v);
    }
    else
    {
      throw Error(ErrorKind::invalid_argument, "unknown parameter '" + n + "'");
    }
  }
  return s;
}

/// Called with every finished run; may be called from several threads.
using RunObserver = std::function<void(SimResult const &)>;

/// Grid search of scenario parameters, one simulation per point and seed.
inline GridSearchResult optimize_scenario(Layout const &layout, Scenario const &base, SearchSpace const &space,
                                          unsigned jobs, RunObserver const &observe = {})
{
  std::vector<std::string> names;
  for (auto const &a : space.axes)
  {
    names.push_back(a.name);
  }
  return grid_search(
      space,
      [&](std::vector<double> const &p, std::uint64_t seed) {
        auto const r = simulate(layout, with_params(base, names, p), seed);
        if (observe)
        {
          observe(r);
        }
        return metric_row(r);
      },
      jobs);
}

/// One row of a Priority Pass sweep.
struct SweepRow
{
  double flow{};
  double gamma{};
  double tau{};
  std::uint64_t seed{};
  MetricRow metrics;
};

struct SweepSpec
{
  std::vector<double> flows;
  std::vector<double> gammas;
  std::vector<double> taus;
  std::vector<std::uint64_t> seeds;
};

struct SweepOutput
{
  std::vector<SweepRow> rows;       // Priority Pass, flow-major then gamma, tau, seed
  std::vector<SweepRow> reference;  // Max-Pressure, one per flow and seed
  DelayResponse response;
};

/// Seed means of the Priority Pass rows at one grid point, with the
/// across-seed standard deviation of the group delays.
inline DelayPoint delay_point(std::span<const SweepRow> seeds, double delta_avg)
{
  DelayPoint d;
  d.gamma     = seeds.front().gamma;
  d.tau       = seeds.front().tau;
  d.flow      = seeds.front().flow;
  d.delta_avg = delta_avg;
  auto stats  = [&](char const *key) {
    std::vector<double> xs;
    for (auto const &r : seeds)
    {
      xs.push_back(r.metrics.at(key));
    }
    return summarize(xs);
  };
  auto const all = stats("delay");
  auto const pp  = stats("delay_pp");
  auto const npp = stats("delay_npp");
  auto const fl  = stats("network_flow");
  auto const sp  = stats("mean_speed");
  // An empty group has nothing to report; it takes the overall delay so
  // gamma = 0 and gamma = 1 stay well defined.
  d.delta_pp     = d.gamma > 0.0 ? pp.mean : all.mean;
  d.delta_npp    = d.gamma < 1.0 ? npp.mean : all.mean;
  d.sd_avg       = all.sd;
  d.sd_pp        = d.gamma > 0.0 ? pp.sd : all.sd;
  d.sd_npp       = d.gamma < 1.0 ? npp.sd : all.sd;
  d.network_flow = fl.mean;
  d.mean_speed   = sp.mean;
  return d;
}

/// Simulates Priority Pass over flows x gamma x tau x seeds and Max-Pressure
/// at every flow and seed as the reference without prioritization.
inline SweepOutput run_sweep(Layout const &layout, Scenario const &base, SweepSpec const &spec, unsigned jobs,
                             RunObserver const &observe = {})
{
  if (spec.flows.empty() || spec.gammas.empty() || spec.taus.empty() || spec.seeds.empty())
  {
    throw Error(ErrorKind::invalid_argument, "sweep grids and seeds must be nonempty");
  }
  SweepOutput out;
  std::size_t const ns = spec.seeds.size();
  for (double f : spec.flows)
  {
    for (double g : spec.gammas)
    {
      for (double t : spec.taus)
      {
        for (auto s : spec.seeds)
        {
          out.rows.push_back({f, g, t, s, {}});
        }
      }
    }
    for (auto s : spec.seeds)
    {
      out.reference.push_back({f, 0.0, 0.0, s, {}});
    }
  }
  std::size_t const n_pp = out.rows.size();
  parallel_for(n_pp + out.reference.size(), jobs, [&](std::size_t i) {
    bool const ref = i >= n_pp;
    auto &row      = ref ? out.reference[i - n_pp] : out.rows[i];
    Scenario s     = base;
    s.flow         = FlowProfile::constant(row.flow);
    s.entitlement_share = row.gamma;
    if (ref)
    {
      s.controller.kind = ControllerKind::max_pressure;
    }
    else
    {
      s.controller.kind       = ControllerKind::priority_pass;
      s.controller.auction.tau = row.tau;
    }
    auto const r = simulate(layout, s, row.seed);
    if (observe)
    {
      observe(r);
    }
    row.metrics = metric_row(r);
  });

  for (std::size_t fi = 0; fi < spec.flows.size(); ++fi)
  {
    std::span<const SweepRow> ref(out.reference.data() + fi * ns, ns);
    std::vector<double> d, fl, sp;
    for (auto const &r : ref)
    {
      d.push_back(r.metrics.at("delay"));
      fl.push_back(r.metrics.at("network_flow"));
      sp.push_back(r.metrics.at("mean_speed"));
    }
    double const delta_avg = summarize(d).mean;
    out.response.set_reference(spec.flows[fi], summarize(fl).mean, summarize(sp).mean, delta_avg);
    std::size_t const per_flow = spec.gammas.size() * spec.taus.size() * ns;
    for (std::size_t k = 0; k < spec.gammas.size() * spec.taus.size(); ++k)
    {
      std::span<const SweepRow> cell(out.rows.data() + fi * per_flow + k * ns, ns);
      out.response.add(delay_point(cell, delta_avg));
    }
  }
  return out;
}

/// Vehicles spawned for a scenario, entitled by a market allocation among
/// themselves: vehicle i is consumer i with the vehicle's own route.
struct MarketDemand
{
  std::vector<Vehicle> vehicles;
  std::vector<Consumer> consumers;
  EntitlementAllocation allocation;
};

inline MarketDemand market_vehicles(Layout const &layout, Scenario const &s, MarketScenario const &market,
                                    DelayPoint const &response, AllocationMode mode, double retention,
                                    std::uint64_t seed)
{
  Scenario plain          = s;
  plain.entitlement_share = 0.0;
  MarketDemand m;
  m.vehicles = scenario_vehicles(layout, plain, seed);
  std::vector<int> routes;
  for (auto const &v : m.vehicles)
  {
    routes.push_back(v.route);
  }
  m.consumers  = synth_population(market, layout.routes, routes, seed);
  m.allocation = allocate(m.consumers, mode, s.entitlement_share, response, retention);
  for (std::size_t i = 0; i < m.vehicles.size(); ++i)
  {
    m.vehicles[i].vot = m.consumers[i].vot;
  }
  assign_entitlement(m.vehicles, m.allocation);
  return m;
}

}  // namespace ppass
