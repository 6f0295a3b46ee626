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

#include "ppass/config.hpp"
#include "ppass/experiment.hpp"
#include "ppass/fundamentals.hpp"
#include "ppass/io.hpp"
#include "ppass/market.hpp"
#include "ppass/metrics.hpp"
#include "ppass/optimize.hpp"
#include "ppass/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace ppass {

inline constexpr char const *kEngineVersion = "1.0.0";

struct CommandOptions
{
  unsigned jobs{1};
  std::filesystem::path out;  // empty: the config's output dir
  std::ostream *log{nullptr};
};

namespace detail {

inline std::filesystem::path out_dir(ScenarioConfig const &cfg, CommandOptions const &o)
{
  return o.out.empty() ? std::filesystem::path(cfg.output_dir) : o.out;
}

inline void write_json(std::filesystem::path const &path, nlohmann::json const &j)
{
  if (path.has_parent_path())
  {
    ensure_directory(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
  {
    throw Error(ErrorKind::io_error, "cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
  if (!out)
  {
    throw Error(ErrorKind::io_error, "failed writing " + path.string());
  }
}

inline nlohmann::json number_or_null(double x)
{
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

/// Enough to rerun the experiment: the config itself, its hash, seeds and
/// engine version. No timestamps, so reruns produce identical files.
inline void write_manifest(std::filesystem::path const &dir, std::string const &command, ScenarioConfig const &cfg)
{
  nlohmann::json j;
  j["command"]        = command;
  j["engine_version"] = kEngineVersion;
  j["config_hash"]    = fnv1a_hex(cfg.raw);
  j["config_path"]    = cfg.source.string();
  j["seeds"]          = cfg.seeds;
  j["dynamics"]       = {{"saturation_headway_s", cfg.scenario.dynamics.saturation_headway},
                         {"vehicle_length_m", cfg.scenario.dynamics.vehicle_length},
                         {"step_s", cfg.scenario.dynamics.step}};
  j["config"]         = nlohmann::json::parse(cfg.raw);
  write_json(dir / "manifest.json", j);
}

inline void say(CommandOptions const &o, std::string const &line)
{
  if (o.log)
  {
    *o.log << line << '\n';
  }
}

inline std::vector<std::string> metric_names(MetricRow const &row)
{
  std::vector<std::string> out;
  for (auto const &[k, _] : row)
  {
    out.push_back(k);
  }
  return out;
}

/// Configured response directory resolved against the config file, or the
/// command's own output directory.
inline std::filesystem::path response_dir(ScenarioConfig const &cfg, std::string const &configured,
                                          std::filesystem::path const &out)
{
  return configured.empty() ? out : cfg.resolve(configured);
}

inline DelayResponse load_response(std::filesystem::path const &dir)
{
  auto const resp = dir / "response.csv";
  auto const ref  = dir / "reference.csv";
  for (auto const &p : {resp, ref})
  {
    if (!std::filesystem::exists(p))
    {
      throw Error(ErrorKind::missing_dependency,
                  "missing " + p.string() + "; run the sweep command for this configuration first");
    }
  }
  return read_response(resp, ref);
}

inline MarketScenario market_scenario(ScenarioConfig const &cfg, MarketSection const &m, double p_urgency)
{
  auto const path = cfg.resolve(m.wage_table);
  if (!std::filesystem::exists(path))
  {
    throw Error(ErrorKind::missing_dependency, "wage table " + path.string() + " not found");
  }
  MarketScenario s;
  s.wages        = read_wage_table(path);
  s.p_urgency    = p_urgency;
  s.minimum_wage = m.minimum_wage;
  s.population   = m.population;
  return s;
}

inline MarketSection const &require_market(ScenarioConfig const &cfg, char const *command)
{
  if (!cfg.market)
  {
    throw Error(ErrorKind::config_invalid, cfg.source.string() + ":1: the " + std::string(command) +
                                               " command needs a 'market' section");
  }
  return *cfg.market;
}

inline PrioritySelectionOptions selection_options(Layout const &layout, double flow, double budget,
                                                  AllocationMode mode, double retention)
{
  PrioritySelectionOptions o;
  o.flow              = flow;
  o.total_flow        = flow * static_cast<double>(layout.net.entrances.size());
  o.mean_trip_km      = layout.routes.mean_length() / 1000.0;
  o.efficiency_budget = budget;
  o.mode              = mode;
  o.retention         = retention;
  return o;
}

inline nlohmann::json candidate_json(PriorityCandidate const &c)
{
  return {{"gamma", c.gamma},
          {"tau", c.tau},
          {"price", number_or_null(c.price)},
          {"realized_gamma", c.realized_gamma},
          {"c_r", c.c_r},
          {"C_r", c.C_r},
          {"flow_ratio", c.flow_ratio},
          {"speed_ratio", c.speed_ratio},
          {"user_ok", c.user_ok},
          {"efficiency_ok", c.efficiency_ok}};
}

inline void write_signal_durations(CsvWriter &w, std::string const &controller, SignalStats const &s)
{
  for (auto const &d : s.durations)
  {
    w.cell(controller).cell(d.phase + 1).cell(d.duration).cell(d.color == SignalColor::green ? "green" : "red");
    w.end_row();
  }
}

}  // namespace detail

/// Runs the configured scenario for every seed and writes trip and event
/// logs, efficiency, delays, signal durations and the manifest.
inline void cmd_simulate(ScenarioConfig const &cfg, CommandOptions const &o)
{
  auto const dir = detail::out_dir(cfg, o);
  ensure_directory(dir);
  Layout const layout(cfg.scenario.grid);
  std::vector<SimResult> results(cfg.seeds.size());
  std::optional<std::vector<Vehicle>> listed;
  if (cfg.demand_kind == "vehicle_list")
  {
    auto const path = cfg.resolve(cfg.vehicle_list);
    if (!std::filesystem::exists(path))
    {
      throw Error(ErrorKind::missing_dependency, "vehicle list " + path.string() + " not found");
    }
    listed = read_vehicle_list(path, layout.routes);
  }
  parallel_for(cfg.seeds.size(), o.jobs, [&](std::size_t i) {
    auto const seed = cfg.seeds[i];
    results[i]      = simulate(layout, cfg.scenario, seed, listed);
    if (cfg.trip_logs)
    {
      write_trip_log(dir / "trips" / ("seed_" + std::to_string(seed) + ".csv"), results[i]);
    }
    if (cfg.event_logs)
    {
      write_event_log(dir / "events" / ("seed_" + std::to_string(seed) + ".csv"), results[i].events);
    }
  });

  std::string const controller(to_string(cfg.scenario.controller.kind));
  double const tau = cfg.scenario.controller.kind == ControllerKind::priority_pass ? cfg.scenario.controller.auction.tau
                                                                                   : 0.0;
  CsvWriter eff(dir / "efficiency.csv", {"controller", "flow", "gamma", "tau", "seed", "throughput",
                                         "completion_rate", "mean_queue", "mean_delay", "total_travel_time"});
  CsvWriter del(dir / "delays.csv", {"seed", "group", "count", "mean_s_per_km", "sd_s_per_km"});
  CsvWriter sig(dir / "signals.csv", {"controller", "phase", "duration_s", "color"});
  CsvWriter sw(dir / "switches.csv", {"controller", "seed", "switches_per_intersection_hour"});
  std::optional<CsvWriter> fd;
  if (cfg.scenario.run.fundamental_interval > 0.0)
  {
    fd.emplace(dir / "fundamentals.csv", std::vector<std::string>{"seed", "t", "accumulation", "flow", "speed"});
  }
  double const from = cfg.scenario.run.warmup, to = cfg.scenario.run.warmup + cfg.scenario.run.record;
  int const nodes   = cfg.scenario.grid.rows * cfg.scenario.grid.cols;
  for (std::size_t i = 0; i < results.size(); ++i)
  {
    auto const &r   = results[i];
    auto const seed = cfg.seeds[i];
    auto const e    = aggregate_efficiency(r);
    eff.cell(controller).cell(r.meta.flow).cell(cfg.scenario.entitlement_share).cell(tau).cell(seed);
    eff.cell(e.throughput).cell(e.completion_rate).cell(e.mean_queue).cell(e.mean_delay).cell(e.total_travel_time);
    eff.end_row();
    auto const g = group_delays(r);
    for (auto const &[name, stat] : {std::pair<char const *, GroupStat>{"all", g.all},
                                     {"entitled", g.entitled},
                                     {"not_entitled", g.not_entitled}})
    {
      del.cell(seed).cell(name).cell(stat.count).cell(stat.mean).cell(stat.sd).end_row();
    }
    auto const s = signal_stats(r.events, from, to, nodes);
    detail::write_signal_durations(sig, controller, s);
    sw.cell(controller).cell(seed).cell(s.switches_per_intersection_hour).end_row();
    if (fd)
    {
      for (auto const &f : r.fundamentals)
      {
        fd->cell(seed).cell(f.t).cell(f.accumulation).cell(f.flow).cell(f.mean_speed).end_row();
      }
    }
    detail::say(o, "seed " + std::to_string(seed) + ": throughput " + format_number(e.throughput) +
                       " veh/h, mean delay " + format_number(e.mean_delay) + " s/km");
  }
  eff.close();
  del.close();
  sig.close();
  sw.close();
  if (fd)
  {
    fd->close();
  }
  detail::write_manifest(dir, "simulate", cfg);
}

/// Priority Pass over flows x gamma x tau plus the Max-Pressure reference;
/// writes every run and the seed-averaged delay response.
inline void cmd_sweep(ScenarioConfig const &cfg, CommandOptions const &o)
{
  if (!cfg.sweep)
  {
    throw Error(ErrorKind::config_invalid, cfg.source.string() + ":1: the sweep command needs a 'sweep' section");
  }
  auto const dir = detail::out_dir(cfg, o);
  ensure_directory(dir);
  Layout const layout(cfg.scenario.grid);
  SweepSpec spec{cfg.sweep->flows, cfg.sweep->gammas, cfg.sweep->taus, cfg.seeds};
  detail::say(o, "sweeping " + std::to_string(spec.flows.size() * spec.gammas.size() * spec.taus.size()) +
                     " points x " + std::to_string(spec.seeds.size()) + " seeds");
  auto const out = run_sweep(layout, cfg.scenario, spec, o.jobs);

  auto const names = detail::metric_names(out.rows.front().metrics);
  std::vector<std::string> header{"controller", "flow", "gamma", "tau", "seed"};
  header.insert(header.end(), names.begin(), names.end());
  CsvWriter w(dir / "sweep.csv", header);
  auto emit = [&](SweepRow const &r, char const *controller) {
    w.cell(controller).cell(r.flow).cell(r.gamma).cell(r.tau).cell(r.seed);
    for (auto const &n : names)
    {
      w.cell(r.metrics.at(n));
    }
    w.end_row();
  };
  for (auto const &r : out.reference)
  {
    emit(r, "max_pressure");
  }
  for (auto const &r : out.rows)
  {
    emit(r, "priority_pass");
  }
  w.close();
  write_response(dir / "response.csv", dir / "reference.csv", out.response);
  detail::write_manifest(dir, "sweep", cfg);
}

/// Grid search of fixed-cycle or Max-Pressure timing, or selection of the
/// Priority Pass parameters from a prior sweep.
inline void cmd_optimize(ScenarioConfig const &cfg, CommandOptions const &o)
{
  if (!cfg.optimize)
  {
    throw Error(ErrorKind::config_invalid,
                cfg.source.string() + ":1: the optimize command needs an 'optimize' section");
  }
  auto const &opt = *cfg.optimize;
  auto const dir  = detail::out_dir(cfg, o);
  ensure_directory(dir);
  Layout const layout(cfg.scenario.grid);

  if (opt.target == "priority")
  {
    auto const &m       = detail::require_market(cfg, "optimize");
    auto const response = detail::load_response(detail::response_dir(cfg, opt.response_dir, dir));
    auto const market   = detail::market_scenario(cfg, m, m.p_urgency);
    auto const people   = synth_population(market, layout.routes, m.seed);
    nlohmann::json j;
    j["target"]            = "priority";
    j["objective"]         = "system_benefit";
    j["allocation"]        = to_string(opt.allocation);
    j["efficiency_budget"] = opt.efficiency_budget;
    CsvWriter w(dir / "candidates.csv", {"flow", "gamma", "tau", "price", "realized_gamma", "c_r", "C_r",
                                         "flow_ratio", "speed_ratio", "user_ok", "efficiency_ok"});
    for (double flow : opt.flows)
    {
      auto const so =
          detail::selection_options(layout, flow, opt.efficiency_budget, opt.allocation, opt.retention);
      auto const sel = select_priority_params(response, people, so);
      for (auto const &c : sel.candidates)
      {
        w.cell(response.nearest_flow(flow)).cell(c.gamma).cell(c.tau).cell(c.price).cell(c.realized_gamma);
        w.cell(c.c_r).cell(c.C_r).cell(c.flow_ratio).cell(c.speed_ratio).cell(c.user_ok ? 1 : 0);
        w.cell(c.efficiency_ok ? 1 : 0).end_row();
      }
      auto entry               = detail::candidate_json(sel.best);
      entry["flow"]            = flow;
      entry["response_flow"]   = response.nearest_flow(flow);
      entry["null_point"]      = sel.null_point;
      entry["flow_slack"]      = sel.best.flow_ratio - (1.0 - opt.efficiency_budget);
      entry["speed_slack"]     = sel.best.speed_ratio - (1.0 - opt.efficiency_budget);
      entry["feasible_points"] = std::count_if(sel.candidates.begin(), sel.candidates.end(),
                                               [](auto const &c) { return c.feasible(); });
      j["optima"].push_back(entry);
      detail::say(o, "flow " + format_number(flow) + ": gamma " + format_number(sel.best.gamma) + ", tau " +
                         format_number(sel.best.tau) + ", C_r " + format_number(sel.best.C_r) + " $/h");
    }
    w.close();
    detail::write_json(dir / "optimum.json", j);
    detail::write_manifest(dir, "optimize", cfg);
    return;
  }

  Scenario base = cfg.scenario;
  SearchSpace space;
  space.objective = opt.objective;
  space.seeds     = cfg.seeds;
  if (opt.target == "fixed_cycle")
  {
    base.controller.kind = ControllerKind::fixed_cycle;
    space.axes           = {{"t_f1", opt.t_f1}, {"t_f2", opt.t_f2}};
  }
  else
  {
    base.controller.kind = ControllerKind::max_pressure;
    space.axes           = {{"t_min", opt.t_min}, {"t_auc", opt.t_auc}};
  }
  detail::say(o, "searching " + std::to_string(space.size()) + " points x " + std::to_string(space.seeds.size()) +
                     " seeds");
  auto const res = optimize_scenario(layout, base, space, o.jobs);

  auto const names = detail::metric_names(res.table.front().per_seed.front().metrics);
  std::vector<std::string> header = res.names;
  header.push_back("seed");
  header.insert(header.end(), names.begin(), names.end());
  CsvWriter w(dir / "sweep.csv", header);
  for (auto const &r : res.table)
  {
    for (auto const &s : r.per_seed)
    {
      for (double p : r.point)
      {
        w.cell(p);
      }
      w.cell(s.seed);
      for (auto const &n : names)
      {
        w.cell(s.metrics.at(n));
      }
      w.end_row();
    }
  }
  w.close();
  auto const &best = res.best_result();
  nlohmann::json j;
  j["target"]    = opt.target;
  j["objective"] = to_string(opt.objective);
  j["flow"]      = cfg.scenario.flow.segments.empty() ? 0.0 : cfg.scenario.flow.segments.front().flow;
  for (std::size_t k = 0; k < res.names.size(); ++k)
  {
    j["parameters"][res.names[k]] = best.point[k];
  }
  j["objective_mean"] = best.mean;
  j["objective_sd"]   = best.sd;
  j["metric_means"]   = best.means;
  detail::write_json(dir / "optimum.json", j);
  detail::write_manifest(dir, "optimize", cfg);
  std::string summary = "best";
  for (std::size_t k = 0; k < res.names.size(); ++k)
  {
    summary += " " + res.names[k] + "=" + format_number(best.point[k]);
  }
  detail::say(o, summary + ", " + to_string(opt.objective) + " " + format_number(best.mean));
}

/// Demand curves, allocations and welfare by allocation mode on a
/// synthesized population, from a prior sweep's delay response.
inline void cmd_market(ScenarioConfig const &cfg, CommandOptions const &o)
{
  auto const &m       = detail::require_market(cfg, "market");
  auto const dir      = detail::out_dir(cfg, o);
  ensure_directory(dir);
  Layout const layout(cfg.scenario.grid);
  auto const response = detail::load_response(detail::response_dir(cfg, m.response_dir, dir));
  auto const market   = detail::market_scenario(cfg, m, m.p_urgency);
  auto const people   = synth_population(market, layout.routes, m.seed);
  write_wage_table(dir / "wage_table.csv", market.wages);

  CsvWriter curve(dir / "demand_curve.csv", {"tau", "gamma", "price", "buyers", "realized_gamma"});
  CsvWriter welfare(dir / "welfare.csv", {"mode", "gamma", "tau", "price", "realized_gamma", "u_pp", "u_npp", "c_r",
                                          "leak", "net_c_r", "per_consumer_net"});
  auto gammas = m.gammas;
  auto taus   = m.taus;
  if (gammas.empty() || taus.empty())
  {
    std::set<double> gs, ts;
    for (auto const &p : response.grid(m.flow))
    {
      gs.insert(p.gamma);
      ts.insert(p.tau);
    }
    if (gammas.empty())
    {
      gammas.assign(gs.begin(), gs.end());
    }
    if (taus.empty())
    {
      taus.assign(ts.begin(), ts.end());
    }
  }
  for (double tau : taus)
  {
    for (double gamma : gammas)
    {
      auto const d = response.at(gamma, tau, m.flow);
      std::vector<double> rps;
      for (auto const &c : people)
      {
        rps.push_back(reservation_price(c.route_length, c.vot, d));
      }
      auto const clearing = inverse_demand(rps, gamma);
      curve.cell(tau).cell(gamma).cell(clearing.price).cell(clearing.buyers).cell(clearing.realized_share).end_row();
      for (auto mode : {AllocationMode::free_top_vot, AllocationMode::market, AllocationMode::market_redistribute})
      {
        auto const a = allocate(people, mode, gamma, d, m.retention);
        auto const wl = evaluate_allocation(people, a, d);
        welfare.cell(to_string(mode)).cell(gamma).cell(tau).cell(a.price).cell(wl.gamma).cell(wl.u_pp);
        welfare.cell(wl.u_npp).cell(wl.c_r).cell(wl.leak).cell(wl.net_c_r);
        welfare.cell(population_net_benefit(people, a, d)).end_row();
      }
    }
  }
  curve.close();
  welfare.close();

  auto const d = response.at(m.gamma, m.tau, m.flow);
  auto const a = allocate(people, m.allocation, m.gamma, d, m.retention);
  write_allocation(dir / "allocation.csv", people, a, d);
  auto const wl = evaluate_allocation(people, a, d);
  std::vector<double> urgency, wage, bought;
  for (std::size_t i = 0; i < people.size(); ++i)
  {
    urgency.push_back(people[i].urgency);
    wage.push_back(people[i].wage);
    bought.push_back(a.bought[i]);
  }
  nlohmann::json j;
  j["allocation"]             = to_string(m.allocation);
  j["gamma"]                  = m.gamma;
  j["tau"]                    = m.tau;
  j["flow"]                   = response.nearest_flow(m.flow);
  j["price"]                  = detail::number_or_null(a.price);
  j["buyers"]                 = a.buyer_count();
  j["revenue"]                = a.revenue;
  j["municipal_revenue"]      = a.municipal_revenue;
  j["c_r"]                    = wl.c_r;
  j["net_c_r"]                = wl.net_c_r;
  j["spearman_urgency_bought"] = spearman(urgency, bought);
  j["spearman_wage_bought"]   = spearman(wage, bought);
  detail::write_json(dir / "market.json", j);
  detail::write_manifest(dir, "market", cfg);
  detail::say(o, "price " + format_number(a.price) + " $, buyers " + std::to_string(a.buyer_count()) + ", net c_r " +
                     format_number(wl.net_c_r) + " $/km");
}

/// Day-long welfare and revenue for a city, one urgency scenario at a time.
/// Each hour is mapped to the sweep flow proportional to its share of the
/// peak hour and uses the parameters selected there.
inline void cmd_city(ScenarioConfig const &cfg, CommandOptions const &o)
{
  if (!cfg.city)
  {
    throw Error(ErrorKind::config_invalid, cfg.source.string() + ":1: the city command needs a 'city' section");
  }
  auto const &c  = *cfg.city;
  auto const dir = detail::out_dir(cfg, o);
  ensure_directory(dir);
  Layout const layout(cfg.scenario.grid);
  auto const trips     = hourly_trips(c.daily_profile, c.trips_per_day);
  double const peak    = *std::max_element(trips.begin(), trips.end());
  double const case_km = layout.routes.mean_length() / 1000.0;

  nlohmann::json j;
  j["intersections"]   = c.intersections;
  j["trips_per_day"]   = c.trips_per_day;
  j["mean_trip_km"]    = c.mean_trip_km;
  j["retention"]       = c.retention;

  std::optional<DelayResponse> response;
  std::optional<MarketSection> market;
  if (!c.benefit_per_user)
  {
    market   = detail::require_market(cfg, "city");
    response = detail::load_response(detail::response_dir(cfg, c.response_dir, dir));
  }
  std::vector<double> scenarios = c.benefit_per_user ? std::vector<double>{0.0} : c.urgency_scenarios;
  for (std::size_t k = 0; k < scenarios.size(); ++k)
  {
    std::vector<CityHour> hours;
    std::vector<double> flows(24, 0.0);
    if (c.benefit_per_user)
    {
      for (int h = 0; h < 24; ++h)
      {
        auto const t = trips[static_cast<std::size_t>(h)];
        hours.push_back({h, t, *c.benefit_per_user, *c.gamma * t, *c.price});
      }
    }
    else
    {
      auto const ms     = detail::market_scenario(cfg, *market, scenarios[k]);
      auto const people = synth_population(ms, layout.routes, market->seed);
      std::map<double, PrioritySelection> cache;
      for (int h = 0; h < 24; ++h)
      {
        auto const t = trips[static_cast<std::size_t>(h)];
        double const flow = c.peak_flow * t / peak;
        double const near = response->nearest_flow(flow);
        flows[static_cast<std::size_t>(h)] = near;
        if (!cache.count(near))
        {
          cache.emplace(near, select_priority_params(*response, people,
                                                     detail::selection_options(layout, near, c.efficiency_budget,
                                                                               c.allocation, c.retention)));
        }
        auto const &best = cache.at(near).best;
        double const blocks = c.mean_trip_km / case_km;
        hours.push_back({h, t, best.c_r * c.mean_trip_km, best.realized_gamma * t,
                         best.realized_gamma > 0.0 ? best.price * blocks : 0.0});
      }
    }
    auto const summary = extrapolate_city(hours, c.retention);
    std::string const label = std::to_string(k + 1);
    CsvWriter w(dir / ("hourly_" + label + ".csv"),
                {"hour", "trips", "flow", "benefit_per_user", "buyers", "price", "welfare", "revenue"});
    for (auto const &h : hours)
    {
      w.cell(h.hour).cell(h.trips).cell(flows[static_cast<std::size_t>(h.hour)]).cell(h.benefit_per_user);
      w.cell(h.buyers).cell(h.price).cell(h.benefit_per_user * h.trips).cell(h.buyers * h.price * c.retention);
      w.end_row();
    }
    w.close();
    nlohmann::json s;
    s["scenario"]          = k + 1;
    if (!c.benefit_per_user)
    {
      s["p_urgency"] = scenarios[k];
    }
    s["welfare_per_day"]   = summary.welfare_per_day;
    s["revenue_per_day"]   = summary.revenue_per_day;
    s["payments_per_day"]  = summary.mean_price * summary.prioritized_count;
    s["mean_price"]        = summary.mean_price;
    s["prioritized_count"] = summary.prioritized_count;
    s["prioritized_share"] = summary.trips_per_day > 0.0 ? summary.prioritized_count / summary.trips_per_day : 0.0;
    s["benefit_per_user"]  = summary.benefit_per_user;
    j["scenarios"].push_back(s);
    detail::say(o, "scenario " + label + ": welfare " + format_number(summary.welfare_per_day / 1e6) +
                       " Mio $/day, revenue " + format_number(summary.revenue_per_day / 1e3) + " Thsd $/day");
  }
  detail::write_json(dir / "city.json", j);
  detail::write_manifest(dir, "city", cfg);
}

/// Fundamental-diagram samples and quartic fits along an inflow ramp.
struct FundamentalRun
{
  std::string label;
  std::uint64_t seed{};
  std::vector<FundamentalSample> samples;
  SignalStats signals;
  std::vector<std::pair<double, SignalStats>> steps;  // inflow, stats over that ramp step
};

inline std::vector<FundamentalRun> run_fundamentals(Layout const &layout, Scenario base, FundamentalSection const &f,
                                                    std::vector<std::uint64_t> const &seeds, unsigned jobs,
                                                    RunObserver const &observe = {})
{
  base.flow                     = FlowProfile::ramp(f.start_flow, f.growth, f.step, f.duration);
  base.entitlement_share        = f.entitlement_share;
  base.run.warmup               = 0.0;
  base.run.record               = f.duration;
  base.run.fundamental_interval = f.interval;
  std::vector<FundamentalRun> runs;
  for (auto const &[label, _] : f.controllers)
  {
    for (auto s : seeds)
    {
      runs.push_back({label, s, {}, {}, {}});
    }
  }
  int const nodes = base.grid.rows * base.grid.cols;
  parallel_for(runs.size(), jobs, [&](std::size_t i) {
    Scenario s   = base;
    s.controller = f.controllers[i / seeds.size()].second;
    auto r       = simulate(layout, s, runs[i].seed);
    if (observe)
    {
      observe(r);
    }
    runs[i].samples = std::move(r.fundamentals);
    runs[i].signals = signal_stats(r.events, 0.0, f.duration, nodes);
    for (auto const &seg : s.flow.segments)
    {
      double const end = std::min(seg.start + f.step, f.duration);
      runs[i].steps.emplace_back(seg.flow, signal_stats(r.events, seg.start, end, nodes));
    }
  });
  return runs;
}

inline std::vector<std::pair<double, double>> fd_points(std::vector<FundamentalSample> const &samples, bool speed)
{
  std::vector<std::pair<double, double>> out;
  for (auto const &s : samples)
  {
    out.emplace_back(s.accumulation, speed ? s.mean_speed : s.flow);
  }
  return out;
}

inline void cmd_fundamental(ScenarioConfig const &cfg, CommandOptions const &o)
{
  if (!cfg.fundamental)
  {
    throw Error(ErrorKind::config_invalid,
                cfg.source.string() + ":1: the fundamental command needs a 'fundamental' section");
  }
  auto const &f  = *cfg.fundamental;
  auto const dir = detail::out_dir(cfg, o);
  ensure_directory(dir);
  Layout const layout(cfg.scenario.grid);
  auto const runs = run_fundamentals(layout, cfg.scenario, f, cfg.seeds, o.jobs);

  CsvWriter fits(dir / "fits.csv", {"controller", "seed", "curve", "c0", "c1", "c2", "c3", "c4", "peak_accumulation",
                                    "peak_value", "residual_norm"});
  CsvWriter sig(dir / "signals.csv", {"controller", "phase", "duration_s", "color"});
  CsvWriter sw(dir / "switches.csv", {"controller", "seed", "switches_per_intersection_hour"});
  CsvWriter steps(dir / "signal_steps.csv", {"controller", "seed", "inflow", "switches_per_intersection_hour",
                                             "mean_green_s", "mean_red_s"});
  auto mean_of = [](std::vector<double> const &v) {
    return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  auto fit_row = [&](std::string const &label, std::string const &seed,
                     std::vector<std::pair<double, double>> const &pts, char const *curve) {
    auto const q     = polyfit4(pts);
    double lo = pts.front().first, hi = lo;
    for (auto const &p : pts)
    {
      lo = std::min(lo, p.first);
      hi = std::max(hi, p.first);
    }
    auto const [px, py] = q.peak(lo, hi);
    fits.cell(label).cell(seed).cell(curve);
    for (double c : q.c)
    {
      fits.cell(c);
    }
    fits.cell(px).cell(py).cell(residual_norm(q, pts)).end_row();
  };
  for (auto const &[label, _] : f.controllers)
  {
    CsvWriter w(dir / label / "fundamentals.csv", {"seed", "t", "accumulation", "flow", "speed"});
    std::vector<std::pair<double, double>> all_flow, all_speed;
    for (auto const &r : runs)
    {
      if (r.label != label)
      {
        continue;
      }
      for (auto const &s : r.samples)
      {
        w.cell(r.seed).cell(s.t).cell(s.accumulation).cell(s.flow).cell(s.mean_speed).end_row();
      }
      auto const fp = fd_points(r.samples, false), sp = fd_points(r.samples, true);
      all_flow.insert(all_flow.end(), fp.begin(), fp.end());
      all_speed.insert(all_speed.end(), sp.begin(), sp.end());
      fit_row(label, std::to_string(r.seed), fp, "flow");
      fit_row(label, std::to_string(r.seed), sp, "speed");
      detail::write_signal_durations(sig, label, r.signals);
      sw.cell(label).cell(r.seed).cell(r.signals.switches_per_intersection_hour).end_row();
      for (auto const &[inflow, st] : r.steps)
      {
        steps.cell(label).cell(r.seed).cell(inflow).cell(st.switches_per_intersection_hour);
        steps.cell(mean_of(st.of(SignalColor::green))).cell(mean_of(st.of(SignalColor::red))).end_row();
      }
    }
    w.close();
    fit_row(label, "all", all_flow, "flow");
    fit_row(label, "all", all_speed, "speed");
    detail::say(o, label + ": " + std::to_string(cfg.seeds.size()) + " ramp runs");
  }
  fits.close();
  sig.close();
  sw.close();
  steps.close();
  detail::write_manifest(dir, "fundamental", cfg);
}

/// Nodes, links, phases and routes of the configured grid as JSON.
inline nlohmann::json network_json(Layout const &layout)
{
  auto const &net = layout.net;
  nlohmann::json j;
  j["speed_limit_mps"] = net.speed_limit;
  for (auto const &n : net.nodes)
  {
    j["nodes"].push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}, {"signalized", n.signalized}});
  }
  for (auto const &l : net.links)
  {
    j["links"].push_back({{"id", l.id},
                          {"from", l.from},
                          {"to", l.to},
                          {"length_m", l.length},
                          {"lanes", l.lane_count},
                          {"free_flow_speed_mps", l.free_flow_speed},
                          {"kind", to_string(l.kind)},
                          {"reverse", l.reverse}});
  }
  j["entrances"] = net.entrances;
  j["exits"]     = net.exits;
  for (auto const &in : net.intersections)
  {
    nlohmann::json node{{"node", in.node}, {"row", in.row}, {"col", in.col}};
    for (auto const &p : in.phases)
    {
      nlohmann::json phase{{"id", p.id + 1}, {"label", p.label}};
      for (auto const &m : p.movements)
      {
        phase["movements"].push_back(
            {{"in", m.in_link}, {"out", m.out_link}, {"turn", to_string(m.turn)}, {"lane_group", m.lane_group}});
      }
      node["phases"].push_back(phase);
    }
    j["intersections"].push_back(node);
  }
  for (auto const &r : layout.routes.routes)
  {
    j["routes"].push_back({{"id", r.id},
                           {"entrance", r.origin},
                           {"exit", r.destination},
                           {"links", r.links},
                           {"length_m", r.length},
                           {"free_flow_time_s", r.free_flow_time}});
  }
  return j;
}

}  // namespace ppass
