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

#include "ppass/error.hpp"
#include "ppass/experiment.hpp"
#include "ppass/io.hpp"
#include "ppass/optimize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ppass {

inline constexpr int kSchemaVersion = 1;

struct SweepSection
{
  std::vector<double> flows;
  std::vector<double> gammas;
  std::vector<double> taus;
};

struct OptimizeSection
{
  std::string target{"max_pressure"};  // fixed_cycle | max_pressure | priority
  Objective objective{Objective::total_travel_time};
  std::vector<double> t_f1, t_f2, t_min, t_auc;
  std::vector<double> flows;
  std::string response_dir;
  double efficiency_budget{0.05};
  AllocationMode allocation{AllocationMode::market_redistribute};
  double retention{0.0};
};

struct MarketSection
{
  std::string wage_table;
  double p_urgency{0.5};
  double minimum_wage{15.0};
  std::size_t population{10000};
  std::uint64_t seed{1};
  AllocationMode allocation{AllocationMode::market_redistribute};
  double retention{0.0};
  double gamma{0.2};
  double tau{0.8};
  double flow{250.0};
  std::vector<double> gammas;  // empty: the swept grid
  std::vector<double> taus;
  std::string response_dir;
};

struct CitySection
{
  int intersections{2862};
  double trips_per_day{5958060.0};
  double mean_trip_km{3.0};
  std::vector<double> daily_profile;
  double peak_flow{450.0};
  std::vector<double> urgency_scenarios{0.6, 0.5, 0.4};
  double retention{1.0};
  double efficiency_budget{0.05};
  AllocationMode allocation{AllocationMode::market_redistribute};
  std::string response_dir;
  std::optional<double> benefit_per_user;
  std::optional<double> gamma;
  std::optional<double> price;
};

struct FundamentalSection
{
  std::vector<std::pair<std::string, ControllerSpec>> controllers;
  double start_flow{50.0};
  double growth{0.0863};
  double step{1000.0};
  double duration{30000.0};
  double interval{300.0};
  double entitlement_share{0.2};
};

struct ScenarioConfig
{
  std::string name{"scenario"};
  Scenario scenario;
  std::string demand_kind{"constant"};
  std::string vehicle_list;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
  bool trip_logs{true};
  bool event_logs{true};
  std::optional<SweepSection> sweep;
  std::optional<OptimizeSection> optimize;
  std::optional<MarketSection> market;
  std::optional<CitySection> city;
  std::optional<FundamentalSection> fundamental;
  std::filesystem::path source;
  std::string raw;

  /// Input path relative to the config file's directory.
  std::filesystem::path resolve(std::string const &p) const
  {
    std::filesystem::path path(p);
    if (path.is_absolute() || source.empty())
    {
      return path;
    }
    return source.parent_path() / path;
  }
};

namespace detail {

using json = nlohmann::json;

inline int line_of_offset(std::string const &text, std::size_t offset)
{
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Line of the last object key in `path`, found by scanning the source for
/// each key in turn. Falls back to line 1.
inline int line_of_path(std::string const &text, std::vector<std::string> const &path)
{
  std::size_t pos = 0, hit = 0;
  for (auto const &key : path)
  {
    if (!key.empty() && key.front() == '[')
    {
      continue;
    }
    std::string const needle = "\"" + key + "\"";
    std::size_t from         = pos;
    for (;;)
    {
      auto const at = text.find(needle, from);
      if (at == std::string::npos)
      {
        return hit ? line_of_offset(text, hit) : 1;
      }
      auto after = at + needle.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after])))
      {
        ++after;
      }
      if (after < text.size() && text[after] == ':')
      {
        pos = hit = at;
        pos += needle.size();
        break;
      }
      from = at + 1;
    }
  }
  return hit ? line_of_offset(text, hit) : 1;
}

class Reader
{
public:
  Reader(json const &node, std::vector<std::string> path, std::string const &text, std::string const &file)
    : node_(node)
    , path_(std::move(path))
    , text_(text)
    , file_(file)
  {
  }

  [[noreturn]] void fail(std::string const &message, std::vector<std::string> const &at) const
  {
    std::string where;
    for (auto const &p : at)
    {
      where += (where.empty() || p.front() == '[' ? "" : ".") + p;
    }
    throw Error(ErrorKind::config_invalid, file_ + ":" + std::to_string(line_of_path(text_, at)) + ": " +
                                               (where.empty() ? "" : where + ": ") + message);
  }

  [[noreturn]] void fail(std::string const &message) const
  {
    fail(message, path_);
  }

  void require_object() const
  {
    if (!node_.is_object())
    {
      fail("expected an object");
    }
  }

  /// Rejects keys outside `allowed`.
  void keys(std::initializer_list<char const *> allowed) const
  {
    require_object();
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto const &[k, _] : node_.items())
    {
      if (!ok.count(k))
      {
        fail("unknown key '" + k + "'", child_path(k));
      }
    }
  }

  bool has(char const *key) const
  {
    return node_.contains(key);
  }

  Reader section(char const *key) const
  {
    if (!node_.contains(key))
    {
      fail(std::string("missing required section '") + key + "'");
    }
    Reader r(node_.at(key), child_path(key), text_, file_);
    r.require_object();
    return r;
  }

  Reader child(char const *key) const
  {
    return Reader(node_.at(key), child_path(key), text_, file_);
  }

  double number(char const *key, std::optional<double> fallback = std::nullopt) const
  {
    if (!node_.contains(key))
    {
      if (!fallback)
      {
        fail(std::string("missing required key '") + key + "'");
      }
      return *fallback;
    }
    auto const &v = node_.at(key);
    if (!v.is_number())
    {
      fail("expected a number", child_path(key));
    }
    return v.get<double>();
  }

  double positive(char const *key, std::optional<double> fallback = std::nullopt) const
  {
    double const v = number(key, fallback);
    if (!(v > 0.0))
    {
      fail("must be positive", child_path(key));
    }
    return v;
  }

  double fraction(char const *key, std::optional<double> fallback = std::nullopt) const
  {
    double const v = number(key, fallback);
    if (!(v >= 0.0 && v <= 1.0))
    {
      fail("must lie in [0, 1]", child_path(key));
    }
    return v;
  }

  int integer(char const *key, std::optional<int> fallback = std::nullopt) const
  {
    if (!node_.contains(key))
    {
      if (!fallback)
      {
        fail(std::string("missing required key '") + key + "'");
      }
      return *fallback;
    }
    auto const &v = node_.at(key);
    if (!v.is_number_integer())
    {
      fail("expected an integer", child_path(key));
    }
    return v.get<int>();
  }

  bool boolean(char const *key, bool fallback) const
  {
    if (!node_.contains(key))
    {
      return fallback;
    }
    auto const &v = node_.at(key);
    if (!v.is_boolean())
    {
      fail("expected true or false", child_path(key));
    }
    return v.get<bool>();
  }

  std::string string(char const *key, std::optional<std::string> fallback = std::nullopt) const
  {
    if (!node_.contains(key))
    {
      if (!fallback)
      {
        fail(std::string("missing required key '") + key + "'");
      }
      return *fallback;
    }
    auto const &v = node_.at(key);
    if (!v.is_string())
    {
      fail("expected a string", child_path(key));
    }
    return v.get<std::string>();
  }

  std::string choice(char const *key, std::initializer_list<char const *> options,
                     std::optional<std::string> fallback = std::nullopt) const
  {
    auto const s = string(key, fallback);
    for (auto const *o : options)
    {
      if (s == o)
      {
        return s;
      }
    }
    std::string list;
    for (auto const *o : options)
    {
      list += (list.empty() ? "" : ", ") + std::string(o);
    }
    fail("'" + s + "' is not one of " + list, child_path(key));
  }

  /// Either a list of numbers or {"lo", "hi", "step"}.
  std::vector<double> grid(char const *key, std::optional<std::vector<double>> fallback = std::nullopt) const
  {
    if (!node_.contains(key))
    {
      if (!fallback)
      {
        fail(std::string("missing required key '") + key + "'");
      }
      return *fallback;
    }
    auto const &v = node_.at(key);
    std::vector<double> out;
    if (v.is_array())
    {
      for (auto const &x : v)
      {
        if (!x.is_number())
        {
          fail("expected a list of numbers", child_path(key));
        }
        out.push_back(x.get<double>());
      }
    }
    else if (v.is_object())
    {
      Reader r(v, child_path(key), text_, file_);
      r.keys({"lo", "hi", "step"});
      double const lo = r.number("lo"), hi = r.number("hi"), step = r.number("step");
      if (!(step > 0.0) || hi < lo)
      {
        fail("needs step > 0 and hi >= lo", child_path(key));
      }
      out = linear_grid(lo, hi, step);
    }
    else
    {
      fail("expected a list or {lo, hi, step}", child_path(key));
    }
    if (out.empty())
    {
      fail("grid is empty", child_path(key));
    }
    return out;
  }

  json const &node() const
  {
    return node_;
  }

  std::vector<std::string> child_path(std::string const &key) const
  {
    auto p = path_;
    p.push_back(key);
    return p;
  }

private:
  json const &node_;
  std::vector<std::string> path_;
  std::string const &text_;
  std::string const &file_;
};

inline AllocationMode allocation_mode(Reader const &r, char const *key, AllocationMode fallback)
{
  auto const s = r.choice(key, {"free_top_vot", "market", "market_redistribute"}, std::string(to_string(fallback)));
  if (s == "free_top_vot")
  {
    return AllocationMode::free_top_vot;
  }
  return s == "market" ? AllocationMode::market : AllocationMode::market_redistribute;
}

inline ControllerSpec read_controller(Reader const &r)
{
  r.keys({"kind", "fixed_cycle", "auction"});
  ControllerSpec c;
  auto const kind = r.choice("kind", {"fixed_cycle", "max_pressure", "priority_pass"});
  c.kind          = kind == "fixed_cycle"    ? ControllerKind::fixed_cycle
                    : kind == "max_pressure" ? ControllerKind::max_pressure
                                             : ControllerKind::priority_pass;
  if (r.has("fixed_cycle"))
  {
    auto f = r.section("fixed_cycle");
    f.keys({"through_left_green_s", "right_green_s", "transition_s", "chessboard_offsets"});
    c.fixed.through_left_green = f.integer("through_left_green_s", c.fixed.through_left_green);
    c.fixed.right_green        = f.integer("right_green_s", c.fixed.right_green);
    c.fixed.transition         = f.integer("transition_s", c.fixed.transition);
    c.chessboard_offsets       = f.boolean("chessboard_offsets", true);
    try
    {
      validate(c.fixed);
    }
    catch (Error const &e)
    {
      f.fail(e.what());
    }
  }
  if (r.has("auction"))
  {
    auto a = r.section("auction");
    a.keys({"tau", "min_green_s", "auction_interval_s", "max_red_s", "transition_s"});
    c.auction.tau              = a.fraction("tau", 0.0);
    c.auction.min_green        = a.integer("min_green_s", c.auction.min_green);
    c.auction.auction_interval = a.integer("auction_interval_s", c.auction.auction_interval);
    c.auction.max_red          = a.integer("max_red_s", c.auction.max_red);
    c.auction.transition       = a.integer("transition_s", c.auction.transition);
    try
    {
      validate(c.auction);
    }
    catch (Error const &e)
    {
      a.fail(e.what());
    }
  }
  return c;
}

}  // namespace detail

/// Parses and validates a scenario file. Every problem is reported as
/// config_invalid with "file:line: key.path: message".
inline ScenarioConfig parse_config(std::string const &text, std::string const &file = "<config>")
{
  using detail::json;
  using detail::Reader;
  json doc;
  try
  {
    doc = json::parse(text);
  }
  catch (json::parse_error const &e)
  {
    throw Error(ErrorKind::config_invalid,
                file + ":" + std::to_string(detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                    ": syntax error: " + e.what());
  }
  Reader root(doc, {}, text, file);
  root.keys({"schema_version", "name", "network", "demand", "dynamics", "controller", "run", "seeds", "output",
             "sweep", "optimize", "market", "city", "fundamental"});
  ScenarioConfig cfg;
  cfg.raw = text;
  if (root.integer("schema_version") != kSchemaVersion)
  {
    root.fail("unsupported schema_version, expected " + std::to_string(kSchemaVersion), {"schema_version"});
  }
  cfg.name = root.string("name", "scenario");

  auto net = root.section("network");
  net.keys({"rows", "cols", "link_length_m", "lanes_per_direction", "speed_limit_mps", "exclude_uturn"});
  auto &g         = cfg.scenario.grid;
  g.rows          = net.integer("rows", 3);
  g.cols          = net.integer("cols", 3);
  g.link_length   = net.positive("link_length_m", 100.0);
  g.lanes         = net.integer("lanes_per_direction", 2);
  g.speed_limit   = net.positive("speed_limit_mps", 13.89);
  g.exclude_uturn = net.boolean("exclude_uturn", true);
  if (g.rows < 1 || g.cols < 1 || g.lanes < 1)
  {
    net.fail("rows, cols and lanes_per_direction must be at least 1");
  }

  auto dem = root.section("demand");
  dem.keys({"kind", "flow_per_entrance", "start_flow", "growth", "step_s", "hourly_flows", "entitlement_share",
            "path"});
  cfg.demand_kind                  = dem.choice("kind", {"constant", "ramp", "hourly", "vehicle_list"}, "constant");
  cfg.scenario.entitlement_share   = dem.fraction("entitlement_share", 0.0);

  auto run = root.has("run") ? std::optional<Reader>(root.section("run")) : std::nullopt;
  if (run)
  {
    run->keys({"warmup_s", "record_s", "fundamental_interval_s", "trip_logs", "event_logs"});
    cfg.scenario.run.warmup = run->number("warmup_s", 600.0);
    if (cfg.scenario.run.warmup < 0.0)
    {
      run->fail("must be nonnegative", run->child_path("warmup_s"));
    }
    cfg.scenario.run.record               = run->positive("record_s", 3600.0);
    cfg.scenario.run.fundamental_interval = run->number("fundamental_interval_s", 0.0);
    cfg.trip_logs                         = run->boolean("trip_logs", true);
    cfg.event_logs                        = run->boolean("event_logs", true);
    double const fi                       = cfg.scenario.run.fundamental_interval;
    double const horizon                  = cfg.scenario.run.warmup + cfg.scenario.run.record;
    if (fi < 0.0 || (fi > 0.0 && std::abs(std::fmod(horizon, fi)) > 1e-9))
    {
      run->fail("must be 0 or divide warmup_s + record_s", run->child_path("fundamental_interval_s"));
    }
  }
  double const horizon = cfg.scenario.run.warmup + cfg.scenario.run.record;
  if (cfg.demand_kind == "constant")
  {
    double const f = dem.number("flow_per_entrance");
    if (f < 0.0)
    {
      dem.fail("must be nonnegative", dem.child_path("flow_per_entrance"));
    }
    cfg.scenario.flow = FlowProfile::constant(f);
  }
  else if (cfg.demand_kind == "ramp")
  {
    cfg.scenario.flow = FlowProfile::ramp(dem.positive("start_flow"), dem.number("growth"), dem.positive("step_s"),
                                          horizon);
  }
  else if (cfg.demand_kind == "hourly")
  {
    auto const flows = dem.grid("hourly_flows");
    for (double f : flows)
    {
      if (f < 0.0)
      {
        dem.fail("flows must be nonnegative", dem.child_path("hourly_flows"));
      }
    }
    cfg.scenario.flow = FlowProfile::hourly(flows);
  }
  else
  {
    cfg.vehicle_list  = dem.string("path");
    cfg.scenario.flow = FlowProfile::constant(0.0);
  }

  if (root.has("dynamics"))
  {
    auto d = root.section("dynamics");
    d.keys({"saturation_headway_s", "vehicle_length_m"});
    cfg.scenario.dynamics.saturation_headway = d.positive("saturation_headway_s", 2.0);
    cfg.scenario.dynamics.vehicle_length     = d.positive("vehicle_length_m", 7.5);
  }

  cfg.scenario.controller = detail::read_controller(root.section("controller"));

  if (!root.has("seeds"))
  {
    root.fail("missing required key 'seeds'");
  }
  auto const &seeds = doc.at("seeds");
  if (!seeds.is_array() || seeds.empty())
  {
    root.fail("expected a nonempty list of seeds", {"seeds"});
  }
  for (auto const &s : seeds)
  {
    if (!s.is_number_unsigned())
    {
      root.fail("seeds must be nonnegative integers", {"seeds"});
    }
    cfg.seeds.push_back(s.get<std::uint64_t>());
  }

  cfg.output_dir = "out/" + cfg.name;
  if (root.has("output"))
  {
    auto o = root.section("output");
    o.keys({"dir"});
    cfg.output_dir = o.string("dir", cfg.output_dir);
  }

  if (root.has("sweep"))
  {
    auto s = root.section("sweep");
    s.keys({"flows", "gamma", "tau"});
    SweepSection sw;
    sw.flows  = s.grid("flows");
    sw.gammas = s.grid("gamma", linear_grid(0.0, 1.0, 0.1));
    sw.taus   = s.grid("tau", linear_grid(0.0, 1.0, 0.1));
    cfg.sweep = sw;
  }

  if (root.has("optimize"))
  {
    auto s = root.section("optimize");
    s.keys({"target", "objective", "t_f1", "t_f2", "t_min", "t_auc", "flows", "response_dir", "efficiency_budget",
            "allocation", "retention"});
    OptimizeSection o;
    o.target = s.choice("target", {"fixed_cycle", "max_pressure", "priority"});
    try
    {
      o.objective = parse_objective(s.string("objective", "total_travel_time"));
    }
    catch (Error const &e)
    {
      s.fail(e.what(), s.child_path("objective"));
    }
    auto const range  = linear_grid(1.0, 40.0, 1.0);
    o.t_f1            = s.grid("t_f1", range);
    o.t_f2            = s.grid("t_f2", range);
    o.t_min           = s.grid("t_min", range);
    o.t_auc           = s.grid("t_auc", range);
    o.flows           = s.grid("flows", std::vector<double>{250.0});
    o.response_dir    = s.string("response_dir", "");
    o.efficiency_budget = s.number("efficiency_budget", 0.05);
    if (o.efficiency_budget < 0.0)
    {
      s.fail("must be nonnegative", s.child_path("efficiency_budget"));
    }
    o.allocation = detail::allocation_mode(s, "allocation", AllocationMode::market_redistribute);
    o.retention  = s.fraction("retention", 0.0);
    cfg.optimize = o;
  }

  if (root.has("market"))
  {
    auto s = root.section("market");
    s.keys({"wage_table", "p_urgency", "minimum_wage", "population", "seed", "allocation", "retention", "gamma",
            "tau", "flow", "gammas", "taus", "response_dir"});
    MarketSection m;
    m.wage_table   = s.string("wage_table");
    m.p_urgency    = s.number("p_urgency", 0.5);
    if (!(m.p_urgency > 0.0 && m.p_urgency < 1.0))
    {
      s.fail("must lie in (0, 1)", s.child_path("p_urgency"));
    }
    m.minimum_wage = s.number("minimum_wage", 15.0);
    int const pop  = s.integer("population", 10000);
    if (pop < 1)
    {
      s.fail("must be at least 1", s.child_path("population"));
    }
    m.population   = static_cast<std::size_t>(pop);
    m.seed         = static_cast<std::uint64_t>(s.integer("seed", 1));
    m.allocation   = detail::allocation_mode(s, "allocation", AllocationMode::market_redistribute);
    m.retention    = s.fraction("retention", 0.0);
    m.gamma        = s.fraction("gamma", 0.2);
    m.tau          = s.fraction("tau", 0.8);
    m.flow         = s.positive("flow", 250.0);
    m.gammas       = s.grid("gammas", std::vector<double>{});
    m.taus         = s.grid("taus", std::vector<double>{});
    m.response_dir = s.string("response_dir", "");
    cfg.market     = m;
  }

  if (root.has("city"))
  {
    auto s = root.section("city");
    s.keys({"intersections", "trips_per_day", "mean_trip_km", "daily_profile", "peak_flow", "urgency_scenarios",
            "retention", "efficiency_budget", "allocation", "response_dir", "benefit_per_user", "gamma", "price"});
    CitySection c;
    c.intersections     = s.integer("intersections", 2862);
    c.trips_per_day     = s.number("trips_per_day", 5958060.0);
    c.mean_trip_km      = s.positive("mean_trip_km", 3.0);
    c.daily_profile     = s.grid("daily_profile");
    if (c.daily_profile.size() != 24)
    {
      s.fail("needs 24 hourly weights", s.child_path("daily_profile"));
    }
    c.peak_flow         = s.positive("peak_flow", 450.0);
    c.urgency_scenarios = s.grid("urgency_scenarios", std::vector<double>{0.6, 0.5, 0.4});
    for (double p : c.urgency_scenarios)
    {
      if (!(p > 0.0 && p < 1.0))
      {
        s.fail("urgency parameters must lie in (0, 1)", s.child_path("urgency_scenarios"));
      }
    }
    c.retention         = s.fraction("retention", 1.0);
    c.efficiency_budget = s.number("efficiency_budget", 0.05);
    c.allocation        = detail::allocation_mode(s, "allocation", AllocationMode::market_redistribute);
    c.response_dir      = s.string("response_dir", "");
    if (s.has("benefit_per_user"))
    {
      c.benefit_per_user = s.number("benefit_per_user");
      c.gamma            = s.fraction("gamma", 0.0);
      c.price            = s.number("price", 0.0);
    }
    cfg.city = c;
  }

  if (root.has("fundamental"))
  {
    auto s = root.section("fundamental");
    s.keys({"controllers", "start_flow", "growth", "step_s", "duration_s", "interval_s", "entitlement_share"});
    FundamentalSection f;
    if (!s.has("controllers") || !s.node().at("controllers").is_object() || s.node().at("controllers").empty())
    {
      s.fail("needs a nonempty 'controllers' object of label -> controller");
    }
    auto ctl = s.child("controllers");
    for (auto const &[label, _] : s.node().at("controllers").items())
    {
      f.controllers.emplace_back(label, detail::read_controller(ctl.section(label.c_str())));
    }
    f.start_flow        = s.positive("start_flow", 50.0);
    f.growth            = s.number("growth", 0.0863);
    f.step              = s.positive("step_s", 1000.0);
    f.duration          = s.positive("duration_s", 30000.0);
    f.interval          = s.positive("interval_s", 300.0);
    f.entitlement_share = s.fraction("entitlement_share", 0.2);
    if (std::abs(std::fmod(f.duration, f.interval)) > 1e-9)
    {
      s.fail("interval_s must divide duration_s");
    }
    cfg.fundamental = f;
  }
  return cfg;
}

inline ScenarioConfig load_config(std::filesystem::path const &path)
{
  std::string const text = read_text(path);
  auto cfg   = parse_config(text, path.string());
  cfg.source = path;
  return cfg;
}

}  // namespace ppass
