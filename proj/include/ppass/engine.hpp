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
#include "ppass/demand.hpp"
#include "ppass/error.hpp"
#include "ppass/fundamentals.hpp"
#include "ppass/netgrid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iterator>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ppass {

/// Queue-discharge parameters standing in for car-following settings.
struct DynamicsParams
{
  double saturation_headway{2.0};  // s per vehicle per lane
  double vehicle_length{7.5};      // m, effective storage length
  double step{1.0};                // s, fixed
};

inline void validate(DynamicsParams const &d)
{
  if (!(d.saturation_headway > 0.0) || !(d.vehicle_length > 0.0))
  {
    throw Error(ErrorKind::invalid_argument, "headway and vehicle length must be positive");
  }
  if (d.step != 1.0)
  {
    throw Error(ErrorKind::invalid_argument, "the engine runs on one-second steps");
  }
}

struct RunOptions
{
  double warmup{600.0};
  double record{3600.0};
  double fundamental_interval{0.0};  // 0 disables fundamentals
  bool record_series{false};
  bool record_traversals{false};
};

struct TripRecord
{
  int vehicle_id{};
  int entrance{};
  int exit{};
  double route_length{};    // m
  double free_flow_time{};  // s
  bool entitled{};
  double vot{};
  double spawn{};
  std::optional<double> depart;
  std::optional<double> arrive;

  bool completed() const
  {
    return arrive.has_value();
  }

  /// Actual minus free-flow travel time, counted from spawn so that time spent
  /// waiting for insertion is delay too.
  double delay() const
  {
    double const d = *arrive - spawn - free_flow_time;
    return (d < 0.0 && d > -1e-9) ? 0.0 : d;
  }
};

struct StepSample
{
  long t{};  // clock at the end of the step
  int on_network{};
  int queued{};
  int virtual_queued{};
  int completed{};
  int spawned{};
};

struct Traversal
{
  int vehicle{};
  LinkId link{};
  double enter{};
  double ready{};  // reaches the stop line (or leaves the network on an exit)
  double leave{};
};

struct ScenarioMeta
{
  std::string controller;
  std::uint64_t seed{};
  double flow{};
  double entitlement_share{};
  double tau{};
};

struct SimResult
{
  std::vector<TripRecord> trips;
  std::vector<SignalEvent> events;
  std::vector<ContentionEvent> contentions;
  std::vector<StepSample> series;
  std::vector<FundamentalSample> fundamentals;
  std::vector<Traversal> traversals;
  double warmup{};
  double record{};
  double speed_limit{};
  double window_queue_integral{};  // vehicle-seconds queued at stop lines
  double window_distance{};        // m
  double window_vehicle_time{};    // s
  long window_exits{};
  ScenarioMeta meta;

  bool in_window(TripRecord const &t) const
  {
    return t.spawn >= warmup && t.spawn < warmup + record;
  }
};

/// Link-queue dynamics on one-second steps: vehicles cross each link at free
/// flow, wait in a vertical queue per lane group at the stop line, and are
/// discharged at the saturation rate while their movement is green and the
/// receiving link has storage left.
class Simulation
{
public:
  Simulation(Network const &net, RouteTable const &routes, std::vector<Vehicle> vehicles,
             ControllerSpec const &spec, DynamicsParams dyn, RunOptions opt)
    : net_(net)
    , routes_(routes)
    , vehicles_(std::move(vehicles))
    , dyn_(dyn)
    , opt_(opt)
    , controllers_(make_controllers(net, spec))
  {
    validate(dyn_);
    if (!(opt_.warmup >= 0.0) || !(opt_.record > 0.0))
    {
      throw Error(ErrorKind::invalid_argument, "warmup must be >= 0 and record > 0");
    }
    std::stable_sort(vehicles_.begin(), vehicles_.end(),
                     [](Vehicle const &a, Vehicle const &b) { return a.spawn_time < b.spawn_time; });
    for (std::size_t i = 0; i < vehicles_.size(); ++i)
    {
      index_of_id_.resize(std::max<std::size_t>(index_of_id_.size(),
                                                static_cast<std::size_t>(vehicles_[i].id) + 1),
                          -1);
      index_of_id_[static_cast<std::size_t>(vehicles_[i].id)] = static_cast<int>(i);
    }

    links_.resize(net_.links.size());
    for (auto const &l : net_.links)
    {
      auto &ls    = links_[static_cast<std::size_t>(l.id)];
      ls.capacity = std::max(1, static_cast<int>(std::floor(l.length * l.lane_count / dyn_.vehicle_length)));
      for (int g = 0; g < kMaxLaneGroups; ++g)
      {
        ls.rate[static_cast<std::size_t>(g)] = lanes_in_group(g, l.lane_count) / dyn_.saturation_headway;
      }
    }
    plans_.resize(routes_.size());
    for (auto const &r : routes_.routes)
    {
      auto &plan = plans_[static_cast<std::size_t>(r.id)];
      for (std::size_t h = 0; h + 1 < r.links.size(); ++h)
      {
        auto const m = net_.movement(r.links[h], r.links[h + 1]);
        plan.phase.push_back(static_cast<std::int8_t>(net_.phase_of(m.in_link, m.out_link)));
        plan.group.push_back(static_cast<std::int8_t>(m.lane_group));
      }
    }
    hop_.assign(vehicles_.size(), 0);
    ready_.assign(vehicles_.size(), 0.0);
    enter_.assign(vehicles_.size(), 0.0);
    virtual_.resize(net_.entrances.size());
    signals_.resize(net_.intersections.size());

    double const horizon = opt_.warmup + opt_.record;
    if (opt_.fundamental_interval > 0.0)
    {
      auto const bins = static_cast<std::size_t>(std::floor(horizon / opt_.fundamental_interval + 1e-9));
      fd_             = IntervalAccumulator(0.0, opt_.fundamental_interval, bins);
    }
    window_ = IntervalAccumulator(opt_.warmup, opt_.record, 1);
  }

  long clock() const
  {
    return clock_;
  }

  double horizon() const
  {
    return opt_.warmup + opt_.record;
  }

  void run()
  {
    auto const steps = static_cast<long>(std::llround(horizon()));
    while (clock_ < steps)
    {
      step();
    }
  }

  /// Advances the clock by one second: (a) signals update from the current
  /// observation, (b) vehicles whose free-flow run ends join the stop-line
  /// queue or finish the trip, (c) queues discharge on green, (d) spawns enter
  /// their entrance link or wait at it.
  void step()
  {
    long const t0  = clock_;
    double const T = static_cast<double>(t0 + 1);

    for (std::size_t i = 0; i < controllers_.size(); ++i)
    {
      auto const obs = observe(static_cast<int>(i));
      signals_[i]    = std::visit([&](auto &c) { return c.tick(t0, obs, events_); }, controllers_[i]);
    }

    for (auto const &l : net_.links)
    {
      auto &ls = links_[static_cast<std::size_t>(l.id)];
      while (!ls.transit.empty() && ls.transit.front().ready <= T)
      {
        int const v = ls.transit.front().vehicle;
        ls.transit.pop_front();
        if (l.kind == LinkKind::exit)
        {
          finish_trip(v);
        }
        else
        {
          auto const &plan = plan_of(v);
          ls.queue[static_cast<std::size_t>(plan.group[static_cast<std::size_t>(hop_[static_cast<std::size_t>(v)])])]
              .push_back(v);
          ++queued_;
        }
      }
    }

    for (std::size_t i = 0; i < net_.intersections.size(); ++i)
    {
      SignalState const sig = signals_[i];
      for (LinkId in : net_.intersections[i].incoming)
      {
        auto &ls = links_[static_cast<std::size_t>(in)];
        for (std::size_t g = 0; g < kMaxLaneGroups; ++g)
        {
          discharge(ls, in, g, sig, static_cast<double>(t0));
        }
      }
    }

    while (next_spawn_ < vehicles_.size() && vehicles_[next_spawn_].spawn_time < T)
    {
      auto const &v = vehicles_[next_spawn_];
      virtual_[static_cast<std::size_t>(v.entrance)].push_back(static_cast<int>(next_spawn_));
      ++spawned_;
      ++virtual_count_;
      ++next_spawn_;
    }
    for (std::size_t e = 0; e < virtual_.size(); ++e)
    {
      LinkId const entry = net_.entrances[e];
      auto &ls           = links_[static_cast<std::size_t>(entry)];
      while (!virtual_[e].empty() && ls.occupancy < ls.capacity)
      {
        int const v = virtual_[e].front();
        virtual_[e].pop_front();
        --virtual_count_;
        auto &veh       = vehicles_[static_cast<std::size_t>(v)];
        veh.depart_time = std::max(veh.spawn_time, static_cast<double>(t0));
        ++on_network_;
        enter_link(v, entry, *veh.depart_time);
      }
    }

    clock_ = t0 + 1;
    if (t0 >= opt_.warmup && T <= horizon())
    {
      window_queue_integral_ += queued_;
    }
    if (opt_.record_series)
    {
      series_.push_back({clock_, on_network_, queued_, virtual_count_, completed_, spawned_});
    }
  }

  PhaseObservation observe(int intersection) const
  {
    PhaseObservation obs;
    for (LinkId in : net_.intersections[static_cast<std::size_t>(intersection)].incoming)
    {
      auto const &ls = links_[static_cast<std::size_t>(in)];
      for (std::size_t p = 0; p < kPhaseCount; ++p)
      {
        obs.n[p] += ls.count[p];
        obs.e[p] += ls.entitled[p];
      }
    }
    return obs;
  }

  SignalState signal(int intersection) const
  {
    return signals_[static_cast<std::size_t>(intersection)];
  }

  int in_transit(LinkId l) const
  {
    return static_cast<int>(links_[static_cast<std::size_t>(l)].transit.size());
  }

  int queued(LinkId l, int group) const
  {
    return static_cast<int>(links_[static_cast<std::size_t>(l)].queue[static_cast<std::size_t>(group)].size());
  }

  int occupancy(LinkId l) const
  {
    return links_[static_cast<std::size_t>(l)].occupancy;
  }

  int capacity(LinkId l) const
  {
    return links_[static_cast<std::size_t>(l)].capacity;
  }

  int spawned() const
  {
    return spawned_;
  }

  int completed() const
  {
    return completed_;
  }

  int on_network() const
  {
    return on_network_;
  }

  int virtual_queued() const
  {
    return virtual_count_;
  }

  int stop_line_queued() const
  {
    return queued_;
  }

  /// Vehicle by id.
  Vehicle const &vehicle(int id) const
  {
    return vehicles_[static_cast<std::size_t>(index_of_id_[static_cast<std::size_t>(id)])];
  }

  std::vector<Controller> const &controllers() const
  {
    return controllers_;
  }

  std::vector<SignalEvent> const &events() const
  {
    return events_;
  }

  SimResult result() const
  {
    SimResult r;
    r.warmup      = opt_.warmup;
    r.record      = opt_.record;
    r.speed_limit = net_.speed_limit;
    r.events      = events_;
    r.series      = series_;
    r.traversals  = traversals_;
    for (auto const &c : controllers_)
    {
      if (auto const *a = std::get_if<AuctionController>(&c))
      {
        r.contentions.insert(r.contentions.end(), a->contentions().begin(), a->contentions().end());
      }
    }
    std::sort(r.contentions.begin(), r.contentions.end(), [](auto const &a, auto const &b) {
      return a.clock < b.clock || (a.clock == b.clock && a.intersection < b.intersection);
    });

    // Presence of vehicles still on the network is open-ended at the horizon.
    IntervalAccumulator fd     = fd_;
    IntervalAccumulator window = window_;
    double const end           = horizon();
    r.trips.reserve(vehicles_.size());
    for (auto const &v : vehicles_)
    {
      auto const &route = routes_[v.route];
      TripRecord t;
      t.vehicle_id     = v.id;
      t.entrance       = route.origin;
      t.exit           = route.destination;
      t.route_length   = route.length;
      t.free_flow_time = route.free_flow_time;
      t.entitled       = v.entitled;
      t.vot            = v.vot;
      t.spawn          = v.spawn_time;
      t.depart         = v.depart_time;
      t.arrive         = v.arrival_time;
      if (v.depart_time && !v.arrival_time)
      {
        fd.add_presence(*v.depart_time, end);
        window.add_presence(*v.depart_time, end);
      }
      r.trips.push_back(t);
    }
    std::sort(r.trips.begin(), r.trips.end(),
              [](TripRecord const &a, TripRecord const &b) { return a.vehicle_id < b.vehicle_id; });
    if (fd.size() > 0)
    {
      r.fundamentals = fd.samples(net_.speed_limit);
    }
    r.window_queue_integral = window_queue_integral_;
    r.window_distance       = window.distance(0);
    r.window_vehicle_time   = window.vehicle_time(0);
    r.window_exits          = window.exits(0);
    return r;
  }

private:
  struct Transit
  {
    int vehicle;
    double ready;
  };

  struct LinkState
  {
    std::deque<Transit> transit;
    std::array<std::deque<int>, kMaxLaneGroups> queue;
    std::array<double, kMaxLaneGroups> budget{};
    std::array<double, kMaxLaneGroups> rate{};
    std::array<int, kPhaseCount> count{};
    std::array<int, kPhaseCount> entitled{};
    int occupancy{0};
    int capacity{1};
  };

  struct RoutePlan
  {
    std::vector<std::int8_t> phase;  // at the head of link h
    std::vector<std::int8_t> group;
  };

  RoutePlan const &plan_of(int v) const
  {
    return plans_[static_cast<std::size_t>(vehicles_[static_cast<std::size_t>(v)].route)];
  }

  int next_phase(int v) const
  {
    return plan_of(v).phase[static_cast<std::size_t>(hop_[static_cast<std::size_t>(v)])];
  }

  void discharge(LinkState &ls, LinkId in, std::size_t g, SignalState sig, double t0)
  {
    auto &q = ls.queue[g];
    if (q.empty())
    {
      if (sig.green)
      {
        ls.budget[g] = std::min(ls.budget[g] + ls.rate[g], std::max(ls.rate[g], 1.0));
      }
      else
      {
        ls.budget[g] = 0.0;
      }
      return;
    }
    if (!sig.green || next_phase(q.front()) != sig.phase)
    {
      ls.budget[g] = 0.0;
      return;
    }
    ls.budget[g] = std::min(ls.budget[g] + ls.rate[g], std::max(ls.rate[g], 1.0));
    while (ls.budget[g] >= 1.0 && !q.empty())
    {
      int const v = q.front();
      if (next_phase(v) != sig.phase)
      {
        break;
      }
      auto const &route = routes_[vehicles_[static_cast<std::size_t>(v)].route];
      LinkId const next = route.links[static_cast<std::size_t>(hop_[static_cast<std::size_t>(v)]) + 1];
      if (links_[static_cast<std::size_t>(next)].occupancy >= links_[static_cast<std::size_t>(next)].capacity)
      {
        break;
      }
      q.pop_front();
      --queued_;
      ls.budget[g] -= 1.0;
      double const cross = std::max(ready_[static_cast<std::size_t>(v)], t0);
      leave_link(v, in, cross);
      ++hop_[static_cast<std::size_t>(v)];
      enter_link(v, next, cross);
    }
  }

  void enter_link(int v, LinkId l, double at)
  {
    auto const &link = net_.link(l);
    auto &ls         = links_[static_cast<std::size_t>(l)];
    double const ready = at + link.free_flow_time();
    auto const vi      = static_cast<std::size_t>(v);
    ready_[vi]         = ready;
    enter_[vi]         = at;
    auto it            = ls.transit.end();
    while (it != ls.transit.begin() && std::prev(it)->ready > ready)
    {
      --it;
    }
    ls.transit.insert(it, Transit{v, ready});
    ++ls.occupancy;
    if (link.kind != LinkKind::exit)
    {
      auto const p = static_cast<std::size_t>(next_phase(v));
      ++ls.count[p];
      if (vehicles_[vi].entitled)
      {
        ++ls.entitled[p];
      }
    }
    fd_.add_motion(at, ready, link.free_flow_speed);
    window_.add_motion(at, ready, link.free_flow_speed);
  }

  void leave_link(int v, LinkId l, double at)
  {
    auto &ls = links_[static_cast<std::size_t>(l)];
    --ls.occupancy;
    auto const vi = static_cast<std::size_t>(v);
    if (net_.link(l).kind != LinkKind::exit)
    {
      auto const p = static_cast<std::size_t>(next_phase(v));
      --ls.count[p];
      if (vehicles_[vi].entitled)
      {
        --ls.entitled[p];
      }
    }
    if (opt_.record_traversals)
    {
      traversals_.push_back({vehicles_[vi].id, l, enter_[vi], ready_[vi], at});
    }
  }

  void finish_trip(int v)
  {
    auto const vi = static_cast<std::size_t>(v);
    auto &veh     = vehicles_[vi];
    auto const &route = routes_[veh.route];
    LinkId const last = route.links.back();
    double const at   = ready_[vi];
    leave_link(v, last, at);
    veh.arrival_time = at;
    --on_network_;
    ++completed_;
    fd_.add_presence(*veh.depart_time, at);
    fd_.add_exit(at);
    window_.add_presence(*veh.depart_time, at);
    window_.add_exit(at);
  }

  Network const &net_;
  RouteTable const &routes_;
  std::vector<Vehicle> vehicles_;
  std::vector<int> index_of_id_;
  DynamicsParams dyn_;
  RunOptions opt_;
  std::vector<Controller> controllers_;
  std::vector<SignalState> signals_;
  std::vector<LinkState> links_;
  std::vector<RoutePlan> plans_;
  std::vector<int> hop_;
  std::vector<double> ready_;
  std::vector<double> enter_;
  std::vector<std::deque<int>> virtual_;
  std::vector<SignalEvent> events_;
  std::vector<StepSample> series_;
  std::vector<Traversal> traversals_;
  IntervalAccumulator fd_;
  IntervalAccumulator window_;
  double window_queue_integral_{0.0};
  std::size_t next_spawn_{0};
  long clock_{0};
  int spawned_{0};
  int completed_{0};
  int on_network_{0};
  int virtual_count_{0};
  int queued_{0};
};

/// Simulates warmup + record seconds and returns the full record.
inline SimResult run_scenario(Network const &net, RouteTable const &routes,
                              std::vector<Vehicle> vehicles, ControllerSpec const &spec,
                              DynamicsParams const &dyn, RunOptions const &opt, std::uint64_t seed)
{
  Simulation sim(net, routes, std::move(vehicles), spec, dyn, opt);
  sim.run();
  auto r          = sim.result();
  r.meta.controller = std::string(to_string(spec.kind));
  r.meta.seed       = seed;
  r.meta.tau        = spec.kind == ControllerKind::priority_pass ? spec.auction.tau : 0.0;
  return r;
}

}  // namespace ppass
