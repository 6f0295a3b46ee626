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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace ppass {

using LinkId = int;
using NodeId = int;

/// Direction of travel. Ordered clockwise so that turns are differences mod 4.
enum class Heading : std::uint8_t
{
  north = 0,
  east  = 1,
  south = 2,
  west  = 3,
};

enum class Turn : std::uint8_t
{
  through,
  right,
  uturn,
  left,
};

enum class LinkKind : std::uint8_t
{
  internal,
  entrance,
  exit,
};

inline Turn turn_between(Heading in, Heading out)
{
  auto const d = (static_cast<int>(out) - static_cast<int>(in) + 4) % 4;
  return static_cast<Turn>(d);
}

inline char const *to_string(Heading h)
{
  constexpr char const *names[] = {"north", "east", "south", "west"};
  return names[static_cast<int>(h)];
}

inline char const *to_string(Turn t)
{
  constexpr char const *names[] = {"through", "right", "uturn", "left"};
  return names[static_cast<int>(t)];
}

inline char const *to_string(LinkKind k)
{
  constexpr char const *names[] = {"internal", "entrance", "exit"};
  return names[static_cast<int>(k)];
}

constexpr int kPhaseCount = 4;
constexpr int kMaxLaneGroups = 2;

struct Node
{
  NodeId id{};
  double x{};
  double y{};
  bool signalized{};
};

struct DirectedLink
{
  LinkId id{};
  NodeId from{};
  NodeId to{};
  double length{};
  int lane_count{};
  double free_flow_speed{};
  LinkKind kind{};
  Heading heading{};
  LinkId reverse{-1};

  double free_flow_time() const
  {
    return length / free_flow_speed;
  }
};

struct Movement
{
  LinkId in_link{};
  LinkId out_link{};
  Turn turn{};
  int lane_group{};
};

struct MovementPhase
{
  int id{};
  std::string label;
  std::vector<Movement> movements;
};

struct Intersection
{
  NodeId node{};
  int row{};
  int col{};
  std::vector<LinkId> incoming;
  std::vector<LinkId> outgoing;
  std::array<MovementPhase, kPhaseCount> phases;
};

/// Phase index of a movement. North/south approaches (vehicles heading north
/// or south) own phases 0 and 1, east/west approaches own 2 and 3; the even
/// phase carries through, left and U-turn movements, the odd one right turns.
inline int phase_of(Heading in, Heading out)
{
  bool const ns   = in == Heading::north || in == Heading::south;
  bool const right = turn_between(in, out) == Turn::right;
  return (ns ? 0 : 2) + (right ? 1 : 0);
}

/// Lane group on the approach: the outer lane (group 1) serves right turns
/// when there are at least two lanes, everything else shares group 0.
inline int lane_group_of(Turn turn, int lane_count)
{
  return (turn == Turn::right && lane_count >= 2) ? 1 : 0;
}

inline int lanes_in_group(int group, int lane_count)
{
  if (lane_count < 2)
  {
    return group == 0 ? lane_count : 0;
  }
  return group == 0 ? lane_count - 1 : 1;
}

struct Network
{
  int rows{};
  int cols{};
  double speed_limit{};
  std::vector<Node> nodes;
  std::vector<Intersection> intersections;  // index == node id
  std::vector<DirectedLink> links;
  std::vector<LinkId> entrances;  // clockwise from the north-west corner
  std::vector<LinkId> exits;      // exits[i] shares a boundary node with entrances[i]

  DirectedLink const &link(LinkId id) const
  {
    return links[static_cast<std::size_t>(id)];
  }

  bool is_intersection(NodeId n) const
  {
    return n >= 0 && n < static_cast<NodeId>(intersections.size());
  }

  /// Movement from `in` onto `out` at the intersection `in` leads to.
  Movement movement(LinkId in, LinkId out) const
  {
    auto const &a = link(in);
    auto const &b = link(out);
    Turn const turn = turn_between(a.heading, b.heading);
    return Movement{in, out, turn, lane_group_of(turn, a.lane_count)};
  }

  int phase_of(LinkId in, LinkId out) const
  {
    return ppass::phase_of(link(in).heading, link(out).heading);
  }
};

namespace detail {

inline Heading heading_between(Node const &a, Node const &b)
{
  double const dx = b.x - a.x;
  double const dy = b.y - a.y;
  if (std::abs(dx) > std::abs(dy))
  {
    return dx > 0 ? Heading::east : Heading::west;
  }
  return dy > 0 ? Heading::north : Heading::south;
}

}  // namespace detail

/// Builds a rows x cols signalized grid with a boundary stub on every
/// perimeter approach. Row 0 is the northern edge.
inline Network build_grid(int rows, int cols, double link_length, int lanes_per_dir,
                          double speed_limit)
{
  if (rows < 1 || cols < 1)
  {
    throw Error(ErrorKind::invalid_dimension, "grid needs at least one row and column");
  }
  if (!(link_length > 0.0))
  {
    throw Error(ErrorKind::invalid_dimension, "link length must be positive");
  }
  if (lanes_per_dir < 1)
  {
    throw Error(ErrorKind::invalid_dimension, "at least one lane per direction is required");
  }
  if (!(speed_limit > 0.0))
  {
    throw Error(ErrorKind::invalid_dimension, "speed limit must be positive");
  }

  Network net;
  net.rows        = rows;
  net.cols        = cols;
  net.speed_limit = speed_limit;

  auto add_node = [&](double x, double y, bool signalized) {
    NodeId const id = static_cast<NodeId>(net.nodes.size());
    net.nodes.push_back(Node{id, x, y, signalized});
    return id;
  };
  auto node_xy = [&](int r, int c) {
    return std::pair<double, double>{c * link_length, (rows - 1 - r) * link_length};
  };

  for (int r = 0; r < rows; ++r)
  {
    for (int c = 0; c < cols; ++c)
    {
      auto [x, y]       = node_xy(r, c);
      NodeId const node = add_node(x, y, true);
      Intersection in;
      in.node = node;
      in.row  = r;
      in.col  = c;
      net.intersections.push_back(std::move(in));
    }
  }

  auto add_link = [&](NodeId from, NodeId to, LinkKind kind) {
    LinkId const id = static_cast<LinkId>(net.links.size());
    DirectedLink l;
    l.id              = id;
    l.from            = from;
    l.to              = to;
    l.length          = link_length;
    l.lane_count      = lanes_per_dir;
    l.free_flow_speed = speed_limit;
    l.kind            = kind;
    l.heading         = detail::heading_between(net.nodes[static_cast<std::size_t>(from)],
                                                net.nodes[static_cast<std::size_t>(to)]);
    net.links.push_back(l);
    return id;
  };
  auto add_pair = [&](NodeId a, NodeId b, LinkKind ab, LinkKind ba) {
    LinkId const f                                = add_link(a, b, ab);
    LinkId const r                                = add_link(b, a, ba);
    net.links[static_cast<std::size_t>(f)].reverse = r;
    net.links[static_cast<std::size_t>(r)].reverse = f;
    return std::pair<LinkId, LinkId>{f, r};
  };

  auto at = [&](int r, int c) { return static_cast<NodeId>(r * cols + c); };
  for (int r = 0; r < rows; ++r)
  {
    for (int c = 0; c < cols; ++c)
    {
      if (c + 1 < cols)
      {
        add_pair(at(r, c), at(r, c + 1), LinkKind::internal, LinkKind::internal);
      }
      if (r + 1 < rows)
      {
        add_pair(at(r, c), at(r + 1, c), LinkKind::internal, LinkKind::internal);
      }
    }
  }

  // Boundary stubs, clockwise: north side west->east, east side north->south,
  // south side east->west, west side south->north.
  std::vector<std::pair<int, int>> perimeter;  // (row, col) of the stub end, may be outside
  for (int c = 0; c < cols; ++c)
  {
    perimeter.emplace_back(-1, c);
  }
  for (int r = 0; r < rows; ++r)
  {
    perimeter.emplace_back(r, cols);
  }
  for (int c = cols - 1; c >= 0; --c)
  {
    perimeter.emplace_back(rows, c);
  }
  for (int r = rows - 1; r >= 0; --r)
  {
    perimeter.emplace_back(r, -1);
  }
  for (auto [r, c] : perimeter)
  {
    auto [x, y]      = node_xy(r, c);
    NodeId const end = add_node(x, y, false);
    int const ir     = std::clamp(r, 0, rows - 1);
    int const ic     = std::clamp(c, 0, cols - 1);
    auto [entry, exit_link] = add_pair(end, at(ir, ic), LinkKind::entrance, LinkKind::exit);
    net.entrances.push_back(entry);
    net.exits.push_back(exit_link);
  }

  for (auto const &l : net.links)
  {
    if (net.is_intersection(l.to))
    {
      net.intersections[static_cast<std::size_t>(l.to)].incoming.push_back(l.id);
    }
    if (net.is_intersection(l.from))
    {
      net.intersections[static_cast<std::size_t>(l.from)].outgoing.push_back(l.id);
    }
  }

  constexpr char const *labels[kPhaseCount] = {"NS through+left", "NS right", "EW through+left",
                                               "EW right"};
  for (auto &in : net.intersections)
  {
    for (int p = 0; p < kPhaseCount; ++p)
    {
      in.phases[static_cast<std::size_t>(p)].id    = p;
      in.phases[static_cast<std::size_t>(p)].label = labels[p];
    }
    for (LinkId a : in.incoming)
    {
      for (LinkId b : in.outgoing)
      {
        int const p = net.phase_of(a, b);
        in.phases[static_cast<std::size_t>(p)].movements.push_back(net.movement(a, b));
      }
    }
  }
  return net;
}

struct Route
{
  int id{};
  int origin{};       // index into Network::entrances
  int destination{};  // index into Network::exits
  std::vector<LinkId> links;
  double length{};
  double free_flow_time{};
};

namespace detail {

/// Shortest distance from every node to `target` over internal links.
inline std::vector<double> distances_to(Network const &net, NodeId target)
{
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(net.nodes.size(), inf);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[static_cast<std::size_t>(target)] = 0.0;
  open.emplace(0.0, target);
  while (!open.empty())
  {
    auto [d, n] = open.top();
    open.pop();
    if (d > dist[static_cast<std::size_t>(n)])
    {
      continue;
    }
    if (!net.is_intersection(n))
    {
      continue;
    }
    for (LinkId in : net.intersections[static_cast<std::size_t>(n)].incoming)
    {
      auto const &l = net.link(in);
      if (l.kind != LinkKind::internal)
      {
        continue;
      }
      double const nd = d + l.length;
      if (nd < dist[static_cast<std::size_t>(l.from)])
      {
        dist[static_cast<std::size_t>(l.from)] = nd;
        open.emplace(nd, l.from);
      }
    }
  }
  return dist;
}

}  // namespace detail

/// One shortest route from entrance `origin` to each admissible exit. Among
/// equally short routes the lexicographically smallest link sequence wins.
inline std::vector<Route> enumerate_routes(Network const &net, int origin, bool exclude_uturn)
{
  if (origin < 0 || origin >= static_cast<int>(net.entrances.size()))
  {
    throw Error(ErrorKind::invalid_argument, "unknown entrance " + std::to_string(origin));
  }
  constexpr double eps = 1e-9;
  auto const &entry    = net.link(net.entrances[static_cast<std::size_t>(origin)]);

  std::vector<Route> routes;
  for (int dest = 0; dest < static_cast<int>(net.exits.size()); ++dest)
  {
    if (exclude_uturn && dest == origin)
    {
      continue;
    }
    auto const &exit_link = net.link(net.exits[static_cast<std::size_t>(dest)]);
    auto const dist       = detail::distances_to(net, exit_link.from);
    if (!std::isfinite(dist[static_cast<std::size_t>(entry.to)]))
    {
      throw Error(ErrorKind::unreachable_exit, "exit " + std::to_string(dest) +
                                                   " unreachable from entrance " +
                                                   std::to_string(origin));
    }

    Route r;
    r.origin      = origin;
    r.destination = dest;
    r.links.push_back(entry.id);
    NodeId at = entry.to;
    while (at != exit_link.from)
    {
      LinkId best = -1;
      for (LinkId out : net.intersections[static_cast<std::size_t>(at)].outgoing)
      {
        auto const &l = net.link(out);
        if (l.kind != LinkKind::internal)
        {
          continue;
        }
        double const via = l.length + dist[static_cast<std::size_t>(l.to)];
        if (std::abs(via - dist[static_cast<std::size_t>(at)]) <= eps && (best < 0 || out < best))
        {
          best = out;
        }
      }
      r.links.push_back(best);
      at = net.link(best).to;
    }
    r.links.push_back(exit_link.id);
    for (LinkId l : r.links)
    {
      r.length += net.link(l).length;
      r.free_flow_time += net.link(l).free_flow_time();
    }
    routes.push_back(std::move(r));
  }
  return routes;
}

/// Every route of the network, grouped by entrance, with global ids.
struct RouteTable
{
  std::vector<Route> routes;
  std::vector<std::vector<int>> by_entrance;

  Route const &operator[](int id) const
  {
    return routes[static_cast<std::size_t>(id)];
  }

  std::size_t size() const
  {
    return routes.size();
  }

  double mean_length() const
  {
    double sum = 0.0;
    for (auto const &r : routes)
    {
      sum += r.length;
    }
    return routes.empty() ? 0.0 : sum / static_cast<double>(routes.size());
  }
};

inline RouteTable make_route_table(Network const &net, bool exclude_uturn)
{
  RouteTable table;
  table.by_entrance.resize(net.entrances.size());
  for (int e = 0; e < static_cast<int>(net.entrances.size()); ++e)
  {
    for (auto &r : enumerate_routes(net, e, exclude_uturn))
    {
      r.id = static_cast<int>(table.routes.size());
      table.by_entrance[static_cast<std::size_t>(e)].push_back(r.id);
      table.routes.push_back(std::move(r));
    }
  }
  return table;
}

}  // namespace ppass
