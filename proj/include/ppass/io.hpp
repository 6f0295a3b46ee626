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

#include "ppass/engine.hpp"
#include "ppass/error.hpp"
#include "ppass/market.hpp"
#include "ppass/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

namespace ppass {

/// Shortest text that parses back to the same double.
inline std::string format_number(double x)
{
  if (std::isnan(x))
  {
    return "nan";
  }
  if (std::isinf(x))
  {
    return x > 0 ? "inf" : "-inf";
  }
  if (x == 0.0)
  {
    return "0";
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_number(long long x)
{
  return std::to_string(x);
}

inline double parse_number(std::string_view s)
{
  if (s == "inf")
  {
    return std::numeric_limits<double>::infinity();
  }
  if (s == "nan")
  {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double x{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
  {
    throw Error(ErrorKind::invalid_argument, "not a number: '" + std::string(s) + "'");
  }
  return x;
}

inline void ensure_directory(std::filesystem::path const &dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
  {
    throw Error(ErrorKind::io_error, "cannot create " + dir.string() + ": " + ec.message());
  }
}

/// Comma-separated writer with a fixed header. Fields never contain commas.
class CsvWriter
{
public:
  CsvWriter(std::filesystem::path path, std::vector<std::string> header)
    : path_(std::move(path))
    , columns_(header.size())
  {
    if (path_.has_parent_path())
    {
      ensure_directory(path_.parent_path());
    }
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_)
    {
      throw Error(ErrorKind::io_error, "cannot write " + path_.string());
    }
    write_fields(header);
  }

  CsvWriter &cell(std::string const &s)
  {
    row_.push_back(s);
    return *this;
  }

  CsvWriter &cell(char const *s)
  {
    row_.emplace_back(s);
    return *this;
  }

  CsvWriter &cell(std::string_view s)
  {
    row_.emplace_back(s);
    return *this;
  }

  CsvWriter &cell(double x)
  {
    row_.push_back(format_number(x));
    return *this;
  }

  template <typename I>
    requires std::is_integral_v<I>
  CsvWriter &cell(I x)
  {
    row_.push_back(std::to_string(x));
    return *this;
  }

  void end_row()
  {
    if (row_.size() != columns_)
    {
      throw Error(ErrorKind::invalid_argument, path_.string() + ": row has " + std::to_string(row_.size()) +
                                                   " fields, header has " + std::to_string(columns_));
    }
    write_fields(row_);
    row_.clear();
  }

  void close()
  {
    out_.close();
    if (!out_)
    {
      throw Error(ErrorKind::io_error, "failed writing " + path_.string());
    }
  }

private:
  void write_fields(std::vector<std::string> const &fields)
  {
    for (std::size_t i = 0; i < fields.size(); ++i)
    {
      if (i)
      {
        out_ << ',';
      }
      out_ << fields[i];
    }
    out_ << '\n';
    if (!out_)
    {
      throw Error(ErrorKind::io_error, "failed writing " + path_.string());
    }
  }

  std::filesystem::path path_;
  std::size_t columns_;
  std::ofstream out_;
  std::vector<std::string> row_;
};

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i)
    {
      if (header[i] == name)
      {
        return i;
      }
    }
    throw Error(ErrorKind::invalid_argument, "missing column '" + std::string(name) + "'");
  }
};

inline std::string read_text(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error(ErrorKind::io_error, "cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CsvTable read_csv(std::filesystem::path const &path)
{
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  auto split = [](std::string const &l) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ls(l);
    while (std::getline(ls, field, ','))
    {
      out.push_back(field);
    }
    if (!l.empty() && l.back() == ',')
    {
      out.emplace_back();
    }
    return out;
  };
  std::size_t lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#')
    {
      continue;
    }
    auto fields = split(line);
    if (t.header.empty())
    {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
    {
      throw Error(ErrorKind::invalid_argument,
                  path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty())
  {
    throw Error(ErrorKind::invalid_argument, path.string() + ": no header");
  }
  return t;
}

inline std::vector<std::string> const trip_log_columns{
    "vehicle_id", "entrance", "exit", "route_length_m", "entitled", "vot", "spawn_s", "depart_s", "arrive_s", "delay_s"};

/// Trips of one run; depart/arrive/delay are empty for unfinished trips.
inline void write_trip_log(std::filesystem::path const &path, SimResult const &r)
{
  CsvWriter w(path, trip_log_columns);
  for (auto const &t : r.trips)
  {
    w.cell(t.vehicle_id).cell(t.entrance).cell(t.exit).cell(t.route_length).cell(t.entitled ? 1 : 0).cell(t.vot);
    w.cell(t.spawn);
    w.cell(t.depart ? format_number(*t.depart) : std::string());
    w.cell(t.arrive ? format_number(*t.arrive) : std::string());
    w.cell(t.arrive ? format_number(t.delay()) : std::string());
    w.end_row();
  }
  w.close();
}

inline std::vector<std::string> const event_log_columns{"clock_s", "intersection_id", "event", "phase_id"};

inline void write_event_log(std::filesystem::path const &path, std::vector<SignalEvent> const &events)
{
  CsvWriter w(path, event_log_columns);
  for (auto const &e : events)
  {
    w.cell(static_cast<long long>(e.clock)).cell(e.intersection).cell(to_string(e.kind)).cell(e.phase + 1);
    w.end_row();
  }
  w.close();
}

inline std::vector<SignalEvent> read_event_log(std::filesystem::path const &path)
{
  auto const t = read_csv(path);
  auto const c = t.column("clock_s"), i = t.column("intersection_id"), k = t.column("event"),
             p = t.column("phase_id");
  std::vector<SignalEvent> out;
  for (auto const &row : t.rows)
  {
    SignalEvent e;
    e.clock        = static_cast<long>(parse_number(row[c]));
    e.intersection = static_cast<int>(parse_number(row[i]));
    if (row[k] == "green_start")
    {
      e.kind = SignalEventKind::green_start;
    }
    else if (row[k] == "transition_start")
    {
      e.kind = SignalEventKind::transition_start;
    }
    else
    {
      throw Error(ErrorKind::malformed_log, "unknown event '" + row[k] + "'");
    }
    e.phase = static_cast<int>(parse_number(row[p])) - 1;
    out.push_back(e);
  }
  return out;
}

inline WageTable read_wage_table(std::filesystem::path const &path)
{
  auto const t = read_csv(path);
  auto const w = t.column("wage_usd_per_h"), p = t.column("probability");
  WageTable table;
  for (auto const &row : t.rows)
  {
    table.rows.push_back({parse_number(row[w]), parse_number(row[p])});
  }
  validate(table);
  return table;
}

inline void write_wage_table(std::filesystem::path const &path, WageTable const &table)
{
  CsvWriter w(path, {"wage_usd_per_h", "probability"});
  for (auto const &r : table.rows)
  {
    w.cell(r.wage).cell(r.probability).end_row();
  }
  w.close();
}

inline std::vector<std::string> const vehicle_list_columns{"vehicle_id", "entrance", "exit", "spawn_time", "entitled",
                                                           "vot"};

inline void write_vehicle_list(std::filesystem::path const &path, std::vector<Vehicle> const &vehicles,
                               RouteTable const &routes)
{
  CsvWriter w(path, vehicle_list_columns);
  for (auto const &v : vehicles)
  {
    auto const &r = routes[v.route];
    w.cell(v.id).cell(r.origin).cell(r.destination).cell(v.spawn_time).cell(v.entitled ? 1 : 0).cell(v.vot);
    w.end_row();
  }
  w.close();
}

/// Vehicles from a list; each (entrance, exit) pair must name a route.
inline std::vector<Vehicle> read_vehicle_list(std::filesystem::path const &path, RouteTable const &routes)
{
  auto const t = read_csv(path);
  auto const id = t.column("vehicle_id"), en = t.column("entrance"), ex = t.column("exit"),
             sp = t.column("spawn_time"), et = t.column("entitled"), vo = t.column("vot");
  std::vector<Vehicle> out;
  for (auto const &row : t.rows)
  {
    Vehicle v;
    v.id           = static_cast<int>(parse_number(row[id]));
    v.entrance     = static_cast<int>(parse_number(row[en]));
    int const exit = static_cast<int>(parse_number(row[ex]));
    v.spawn_time   = parse_number(row[sp]);
    v.entitled     = parse_number(row[et]) != 0.0;
    v.vot          = parse_number(row[vo]);
    v.route        = -1;
    if (v.entrance >= 0 && static_cast<std::size_t>(v.entrance) < routes.by_entrance.size())
    {
      for (int r : routes.by_entrance[static_cast<std::size_t>(v.entrance)])
      {
        if (routes[r].destination == exit)
        {
          v.route = r;
        }
      }
    }
    if (v.route < 0)
    {
      throw Error(ErrorKind::unreachable_exit, "no route from entrance " + std::to_string(v.entrance) +
                                                   " to exit " + std::to_string(exit));
    }
    out.push_back(v);
  }
  return out;
}

inline std::vector<std::string> const allocation_columns{"consumer_id", "vot", "reservation_price", "bought", "paid",
                                                         "transfer"};

inline void write_allocation(std::filesystem::path const &path, std::span<const Consumer> consumers,
                             EntitlementAllocation const &a, DelayPoint const &d)
{
  CsvWriter w(path, allocation_columns);
  for (std::size_t i = 0; i < consumers.size(); ++i)
  {
    auto const &c = consumers[i];
    w.cell(c.id).cell(c.vot).cell(reservation_price(c.route_length, c.vot, d)).cell(static_cast<int>(a.bought[i]));
    w.cell(a.paid[i]).cell(a.transfer[i]).end_row();
  }
  w.close();
}

inline std::vector<std::string> const response_columns{
    "flow", "gamma", "tau", "delta_avg", "delta_pp", "delta_npp", "sd_avg", "sd_pp", "sd_npp", "network_flow",
    "mean_speed"};

inline std::vector<std::string> const reference_columns{"flow", "network_flow", "mean_speed", "delta_avg"};

inline void write_response(std::filesystem::path const &response_path, std::filesystem::path const &reference_path,
                           DelayResponse const &response)
{
  CsvWriter w(response_path, response_columns);
  CsvWriter r(reference_path, reference_columns);
  for (double f : response.flows())
  {
    for (auto const &p : response.grid(f))
    {
      w.cell(p.flow).cell(p.gamma).cell(p.tau).cell(p.delta_avg).cell(p.delta_pp).cell(p.delta_npp);
      w.cell(p.sd_avg).cell(p.sd_pp).cell(p.sd_npp).cell(p.network_flow).cell(p.mean_speed).end_row();
    }
    if (auto ref = response.reference(f))
    {
      r.cell(f).cell(ref->network_flow).cell(ref->mean_speed).cell(ref->delta_avg).end_row();
    }
  }
  w.close();
  r.close();
}

inline DelayResponse read_response(std::filesystem::path const &response_path,
                                   std::filesystem::path const &reference_path)
{
  DelayResponse out;
  auto const t = read_csv(response_path);
  std::vector<std::size_t> col;
  for (auto const &name : response_columns)
  {
    col.push_back(t.column(name));
  }
  for (auto const &row : t.rows)
  {
    auto v = [&](std::size_t k) { return parse_number(row[col[k]]); };
    out.add(DelayPoint{v(1), v(2), v(0), v(3), v(4), v(5), v(6), v(7), v(8), v(9), v(10)});
  }
  auto const r = read_csv(reference_path);
  auto const f = r.column("flow"), nf = r.column("network_flow"), ms = r.column("mean_speed"),
             da = r.column("delta_avg");
  for (auto const &row : r.rows)
  {
    out.set_reference(parse_number(row[f]), parse_number(row[nf]), parse_number(row[ms]), parse_number(row[da]));
  }
  return out;
}

/// 64-bit FNV-1a of a byte string, hex.
inline std::string fnv1a_hex(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes)
  {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ppass
