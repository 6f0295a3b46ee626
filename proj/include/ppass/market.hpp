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
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ppass {

/// Empirical hourly-wage distribution, one probability per wage value.
struct WageTable
{
  struct Row
  {
    double wage{};  // $/h
    double probability{};
  };
  std::vector<Row> rows;
};

inline void validate(WageTable const &t)
{
  if (t.rows.empty())
  {
    throw Error(ErrorKind::invalid_argument, "wage table is empty");
  }
  double sum = 0.0;
  for (auto const &r : t.rows)
  {
    if (!(r.probability >= 0.0) || !(r.wage >= 0.0))
    {
      throw Error(ErrorKind::invalid_argument, "wage table entries must be nonnegative");
    }
    sum += r.probability;
  }
  if (std::abs(sum - 1.0) > 1e-6)
  {
    throw Error(ErrorKind::invalid_argument, "wage probabilities sum to " + std::to_string(sum));
  }
}

struct MarketScenario
{
  WageTable wages;
  double p_urgency{0.5};
  double minimum_wage{15.0};
  std::size_t population{10000};
};

struct Consumer
{
  int id{};
  double wage{};  // $/h
  int urgency{1};
  double vot{};  // $/h, urgency * wage
  int route{};
  double route_length{};  // m
};

/// Geometric urgency pmf, P(l) = (1 - p)^(l - 1) p.
inline double urgency_pmf(int level, double p)
{
  return level < 1 ? 0.0 : std::pow(1.0 - p, level - 1) * p;
}

/// Draws `routes_for.size()` consumers; consumer i travels routes_for[i].
/// Wages below the minimum wage are removed from the table before sampling.
inline std::vector<Consumer> synth_population(MarketScenario const &scenario, RouteTable const &routes,
                                              std::span<const int> routes_for, std::uint64_t seed)
{
  validate(scenario.wages);
  if (!(scenario.p_urgency > 0.0 && scenario.p_urgency < 1.0))
  {
    throw Error(ErrorKind::invalid_argument, "urgency parameter must lie in (0, 1)");
  }
  std::vector<WageTable::Row> support;
  double mass = 0.0;
  for (auto const &r : scenario.wages.rows)
  {
    if (r.wage >= scenario.minimum_wage && r.probability > 0.0)
    {
      support.push_back(r);
      mass += r.probability;
    }
  }
  if (support.empty())
  {
    throw Error(ErrorKind::empty_support, "every wage in the table is below the minimum wage");
  }
  std::vector<double> cumulative;
  double acc = 0.0;
  for (auto const &r : support)
  {
    acc += r.probability / mass;
    cumulative.push_back(acc);
  }

  RandomEngine wage_rng    = make_stream(seed, 1001);
  RandomEngine urgency_rng = make_stream(seed, 1002);
  std::vector<Consumer> out;
  out.reserve(routes_for.size());
  for (std::size_t i = 0; i < routes_for.size(); ++i)
  {
    double const u = uniform01(wage_rng);
    auto k         = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    k = std::min(k, support.size() - 1);
    Consumer c;
    c.id           = static_cast<int>(i);
    c.wage         = support[k].wage;
    c.urgency      = geometric(urgency_rng, scenario.p_urgency);
    c.vot          = c.urgency * c.wage;
    c.route        = routes_for[i];
    c.route_length = routes[c.route].length;
    out.push_back(c);
  }
  return out;
}

/// Population of scenario.population consumers on uniformly drawn routes.
inline std::vector<Consumer> synth_population(MarketScenario const &scenario, RouteTable const &routes,
                                              std::uint64_t seed)
{
  RandomEngine rng = make_stream(seed, 1000);
  std::vector<int> picks(scenario.population);
  for (auto &r : picks)
  {
    r = static_cast<int>(uniform_index(rng, routes.size()));
  }
  return synth_population(scenario, routes, picks, seed);
}

/// Delay outcome of one simulated (gamma, tau, flow) point, s/km.
struct DelayPoint
{
  double gamma{};
  double tau{};
  double flow{};
  double delta_avg{};  // baseline without prioritization
  double delta_pp{};
  double delta_npp{};
  double sd_avg{};
  double sd_pp{};
  double sd_npp{};
  double network_flow{};  // veh/h
  double mean_speed{};    // m/s
};

/// Sweep outcomes indexed by flow, then by (gamma, tau) on a grid.
class DelayResponse
{
public:
  void add(DelayPoint const &p)
  {
    table_[p.flow][{key(p.gamma), key(p.tau)}] = p;
  }

  /// Reference (no prioritization) efficiency at a flow.
  void set_reference(double flow, double network_flow, double mean_speed, double delta_avg)
  {
    refs_[flow] = DelayPoint{0.0, 0.0, flow, delta_avg, delta_avg, delta_avg, 0, 0, 0, network_flow, mean_speed};
  }

  bool empty() const
  {
    return table_.empty();
  }

  std::vector<double> flows() const
  {
    std::vector<double> out;
    for (auto const &[f, _] : table_)
    {
      out.push_back(f);
    }
    return out;
  }

  double nearest_flow(double flow) const
  {
    if (table_.empty())
    {
      throw Error(ErrorKind::missing_response_entry, "delay response is empty");
    }
    double best = table_.begin()->first;
    for (auto const &[f, _] : table_)
    {
      if (std::abs(f - flow) < std::abs(best - flow))
      {
        best = f;
      }
    }
    return best;
  }

  std::optional<DelayPoint> reference(double flow) const
  {
    auto it = refs_.find(nearest_flow(flow));
    if (it == refs_.end())
    {
      return std::nullopt;
    }
    return it->second;
  }

  /// Grid points at the nearest simulated flow, ordered by (gamma, tau).
  std::vector<DelayPoint> grid(double flow) const
  {
    std::vector<DelayPoint> out;
    for (auto const &[_, p] : table_.at(nearest_flow(flow)))
    {
      out.push_back(p);
    }
    return out;
  }

  /// Bilinear in (gamma, tau) at the nearest simulated flow.
  DelayPoint at(double gamma, double tau, double flow) const
  {
    double const f  = nearest_flow(flow);
    auto const &cell = table_.at(f);
    std::vector<double> gs, ts;
    for (auto const &[k, _] : cell)
    {
      gs.push_back(value(k.first));
      ts.push_back(value(k.second));
    }
    std::sort(gs.begin(), gs.end());
    gs.erase(std::unique(gs.begin(), gs.end()), gs.end());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    auto bracket = [](std::vector<double> const &xs, double x) -> std::pair<double, double> {
      constexpr double eps = 1e-9;
      if (xs.empty() || x < xs.front() - eps || x > xs.back() + eps)
      {
        throw Error(ErrorKind::missing_response_entry, "query outside the simulated grid");
      }
      auto hi = std::lower_bound(xs.begin(), xs.end(), x - eps);
      if (hi == xs.end())
      {
        --hi;
      }
      if (std::abs(*hi - x) <= eps || hi == xs.begin())
      {
        return {*hi, *hi};
      }
      return {*std::prev(hi), *hi};
    };
    auto [g0, g1] = bracket(gs, gamma);
    auto [t0, t1] = bracket(ts, tau);
    auto corner   = [&](double g, double t) -> DelayPoint const & {
      auto it = cell.find({key(g), key(t)});
      if (it == cell.end())
      {
        throw Error(ErrorKind::missing_response_entry,
                    "no sweep entry at gamma=" + std::to_string(g) + " tau=" + std::to_string(t));
      }
      return it->second;
    };
    double const wg = g1 > g0 ? (gamma - g0) / (g1 - g0) : 0.0;
    double const wt = t1 > t0 ? (tau - t0) / (t1 - t0) : 0.0;
    auto mix = [&](auto field) {
      return (1 - wg) * (1 - wt) * field(corner(g0, t0)) + wg * (1 - wt) * field(corner(g1, t0)) +
             (1 - wg) * wt * field(corner(g0, t1)) + wg * wt * field(corner(g1, t1));
    };
    DelayPoint p;
    p.gamma        = gamma;
    p.tau          = tau;
    p.flow         = f;
    p.delta_avg    = mix([](DelayPoint const &d) { return d.delta_avg; });
    p.delta_pp     = mix([](DelayPoint const &d) { return d.delta_pp; });
    p.delta_npp    = mix([](DelayPoint const &d) { return d.delta_npp; });
    p.sd_avg       = mix([](DelayPoint const &d) { return d.sd_avg; });
    p.sd_pp        = mix([](DelayPoint const &d) { return d.sd_pp; });
    p.sd_npp       = mix([](DelayPoint const &d) { return d.sd_npp; });
    p.network_flow = mix([](DelayPoint const &d) { return d.network_flow; });
    p.mean_speed   = mix([](DelayPoint const &d) { return d.mean_speed; });
    return p;
  }

private:
  // Grid coordinates are keyed on a 1e-6 lattice so 0.1 * 3 finds 0.3.
  static long key(double x)
  {
    return std::lround(x * 1e6);
  }
  static double value(long k)
  {
    return static_cast<double>(k) / 1e6;
  }

  std::map<double, std::map<std::pair<long, long>, DelayPoint>> table_;
  std::map<double, DelayPoint> refs_;
};

/// Money a consumer saves by holding the pass instead of not holding it.
inline double reservation_price(double route_length_m, double vot, DelayPoint const &d)
{
  return (d.delta_npp - d.delta_pp) / 3600.0 * vot * (route_length_m / 1000.0);
}

inline double reservation_price(Consumer const &c, DelayResponse const &response, double gamma,
                                double tau, double flow)
{
  return reservation_price(c.route_length, c.vot, response.at(gamma, tau, flow));
}

struct MarketClearing
{
  double price{std::numeric_limits<double>::infinity()};
  std::size_t buyers{0};
  double realized_share{0.0};
};

/// Price at which round(gamma * n) consumers buy: the k-th largest
/// reservation price. Ties at that price all buy.
inline MarketClearing inverse_demand(std::span<const double> reservation_prices, double gamma)
{
  if (!(gamma >= 0.0 && gamma <= 1.0))
  {
    throw Error(ErrorKind::invalid_argument, "target share must lie in [0, 1]");
  }
  MarketClearing m;
  std::size_t const n = reservation_prices.size();
  std::size_t const k = target_count(gamma, n);
  if (n == 0 || k == 0)
  {
    return m;
  }
  std::vector<double> sorted(reservation_prices.begin(), reservation_prices.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                   std::greater<>());
  m.price = sorted[k - 1];
  for (double rp : reservation_prices)
  {
    m.buyers += rp >= m.price ? 1 : 0;
  }
  m.realized_share = static_cast<double>(m.buyers) / static_cast<double>(n);
  return m;
}

/// Average benefit per user and kilometre, $/km, from group delays (s/km)
/// and group urgencies ($/h).
inline double user_benefit_cr(double delta_avg, double delta_pp, double delta_npp, double gamma,
                              double u_pp, double u_npp)
{
  return (gamma * (delta_avg - delta_pp) * u_pp + (1.0 - gamma) * (delta_avg - delta_npp) * u_npp) /
         3600.0;
}

/// System benefit, $/h.
inline double system_benefit_Cr(double c_r, double total_flow, double mean_trip_km)
{
  return c_r * total_flow * mean_trip_km;
}

/// Top round(gamma * n) by VOT, lower id first on ties, for free.
inline EntitlementAllocation allocate_top_vot(std::span<const double> vots, double gamma)
{
  EntitlementAllocation a;
  a.mode  = AllocationMode::free_top_vot;
  a.price = 0.0;
  std::size_t const n = vots.size();
  a.bought.assign(n, 0);
  a.paid.assign(n, 0.0);
  a.transfer.assign(n, 0.0);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return vots[i] > vots[j]; });
  std::size_t const k = std::min(target_count(gamma, n), n);
  for (std::size_t i = 0; i < k; ++i)
  {
    a.bought[idx[i]] = 1;
  }
  return a;
}

/// Allocation at target share gamma. In the market modes buyers pay the
/// clearing price; with redistribution (1 - retention) of the revenue is
/// split equally among non-buyers and the rest is kept by the authority.
inline EntitlementAllocation allocate(std::span<const Consumer> consumers, AllocationMode mode,
                                      double gamma, DelayPoint const &response, double retention = 0.0)
{
  if (!(retention >= 0.0 && retention <= 1.0))
  {
    throw Error(ErrorKind::invalid_argument, "retention must lie in [0, 1]");
  }
  std::size_t const n = consumers.size();
  if (mode == AllocationMode::free_top_vot)
  {
    std::vector<double> vots(n);
    for (std::size_t i = 0; i < n; ++i)
    {
      vots[i] = consumers[i].vot;
    }
    return allocate_top_vot(vots, gamma);
  }

  std::vector<double> rps(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    rps[i] = reservation_price(consumers[i].route_length, consumers[i].vot, response);
  }
  auto const clearing = inverse_demand(rps, gamma);

  EntitlementAllocation a;
  a.mode  = mode;
  a.price = clearing.price;
  a.bought.assign(n, 0);
  a.paid.assign(n, 0.0);
  a.transfer.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
  {
    if (rps[i] >= clearing.price)
    {
      a.bought[i] = 1;
      a.paid[i]   = clearing.price;
    }
  }
  if (clearing.buyers > 0)
  {
    a.revenue = clearing.price * static_cast<double>(clearing.buyers);
  }
  if (mode == AllocationMode::market)
  {
    a.municipal_revenue = a.revenue;
    return a;
  }
  std::size_t const others = n - clearing.buyers;
  if (others == 0)
  {
    a.municipal_revenue = a.revenue;
    return a;
  }
  a.municipal_revenue = retention * a.revenue;
  double const share  = (a.revenue - a.municipal_revenue) / static_cast<double>(others);
  for (std::size_t i = 0; i < n; ++i)
  {
    if (!a.bought[i])
    {
      a.transfer[i] = share;
    }
  }
  return a;
}

/// Benefit of an allocation to the users, $/km: the group form with
/// buyer/non-buyer mean VOT as urgencies, less money that leaves the user
/// population (payments not handed back).
struct AllocationWelfare
{
  double gamma{};  // realized
  double u_pp{};
  double u_npp{};
  double c_r{};      // before payments
  double leak{};     // $ per km
  double net_c_r{};  // c_r - leak
  double total_km{};
};

inline AllocationWelfare evaluate_allocation(std::span<const Consumer> consumers,
                                             EntitlementAllocation const &a, DelayPoint const &d)
{
  if (a.population() != consumers.size())
  {
    throw Error(ErrorKind::allocation_size_mismatch, "allocation does not match the population");
  }
  AllocationWelfare w;
  double vot_pp = 0.0, vot_npp = 0.0;
  std::size_t n_pp = 0;
  for (std::size_t i = 0; i < consumers.size(); ++i)
  {
    w.total_km += consumers[i].route_length / 1000.0;
    if (a.bought[i])
    {
      vot_pp += consumers[i].vot;
      ++n_pp;
    }
    else
    {
      vot_npp += consumers[i].vot;
    }
  }
  std::size_t const n_npp = consumers.size() - n_pp;
  w.gamma = consumers.empty() ? 0.0 : static_cast<double>(n_pp) / static_cast<double>(consumers.size());
  w.u_pp  = n_pp ? vot_pp / static_cast<double>(n_pp) : 0.0;
  w.u_npp = n_npp ? vot_npp / static_cast<double>(n_npp) : 0.0;
  w.c_r   = user_benefit_cr(d.delta_avg, d.delta_pp, d.delta_npp, w.gamma, w.u_pp, w.u_npp);
  double const returned = std::accumulate(a.transfer.begin(), a.transfer.end(), 0.0);
  double const paid     = std::accumulate(a.paid.begin(), a.paid.end(), 0.0);
  w.leak    = w.total_km > 0.0 ? (paid - returned) / w.total_km : 0.0;
  w.net_c_r = w.c_r - w.leak;
  return w;
}

/// Per-consumer accounting: each consumer's delay-cost change on their own
/// route plus money received minus money paid, per km travelled.
inline double population_net_benefit(std::span<const Consumer> consumers, EntitlementAllocation const &a,
                                     DelayPoint const &d)
{
  double money = 0.0, km = 0.0;
  for (std::size_t i = 0; i < consumers.size(); ++i)
  {
    double const len_km = consumers[i].route_length / 1000.0;
    double const delta  = a.bought[i] ? d.delta_pp : d.delta_npp;
    money += consumers[i].vot * (d.delta_avg - delta) / 3600.0 * len_km + a.transfer[i] - a.paid[i];
    km += len_km;
  }
  return km > 0.0 ? money / km : 0.0;
}

}  // namespace ppass
